"""Command line front end.

    locksim run        one program through the staggered pair, optionally
                       with a single injected fault
    locksim campaign   a sampled or exhaustive injection campaign with
                       JSON/CSV reports and figures
    locksim feasibility  deadline arithmetic for re-execution recovery
    locksim programs   list built-in workloads

Exit codes: 0 clean/masked/feasible, 1 silent corruption or infeasible,
2 configuration error, 3 detected, 4 hang.
"""

import argparse
import os
import sys

from . import config as cfgmod
from . import faultlab as fl
from . import figures
from . import programs
from . import report as rep
from .core_isa import ConfigError, load_hex_file
from .soc_harness import TimingSpec

EXIT_CLEAN = 0
EXIT_SDC = 1
EXIT_CONFIG = 2
EXIT_DETECTED = 3
EXIT_HANG = 4

_OUTCOME_EXIT = {fl.MASKED: EXIT_CLEAN, fl.SDC: EXIT_SDC,
                 fl.DETECTED: EXIT_DETECTED, fl.HANG: EXIT_HANG}


def build_parser():
    p = argparse.ArgumentParser(
        prog="locksim",
        description="staggered dual-core lockstep fault simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="config file (section.key = value)")
        sp.add_argument("--program",
                        help="builtin workload name or a .hex image")
        sp.add_argument("--stagger", type=int,
                        help="cycles between the copies")
        sp.add_argument("--sphere", choices=fl.SPHERES,
                        help="replication sphere layout")
        sp.add_argument("--out", help="write a JSON report here")

    r = sub.add_parser("run", help="single run, optional single fault")
    common(r)
    r.add_argument("--fault-kind", choices=(fl.KIND_SBU, fl.KIND_MBU,
                                            fl.KIND_CCF))
    r.add_argument("--fault-target", choices=(fl.TARGET_REG, fl.TARGET_PC))
    r.add_argument("--fault-cycle", type=int)
    r.add_argument("--fault-bit", type=int)
    r.add_argument("--fault-reg", type=int)
    r.add_argument("--fault-copy", choices=("head", "shadow", "both"))
    r.add_argument("--fault-width", type=int)

    c = sub.add_parser("campaign", help="injection campaign with reports")
    common(c)
    c.add_argument("--kind", choices=(fl.KIND_SBU, fl.KIND_MBU, fl.KIND_CCF))
    c.add_argument("--count", type=int, help="samples (>= space: exhaustive)")
    c.add_argument("--seed", type=int)
    c.add_argument("--no-plots", action="store_true",
                   help="skip figure rendering")

    f = sub.add_parser("feasibility", help="re-execution deadline check")
    f.add_argument("--config")
    f.add_argument("--exec-cycles", type=int)
    f.add_argument("--deadline-cycles", type=int)
    f.add_argument("--max-retries", type=int)
    f.add_argument("--detection-latency", type=int)
    f.add_argument("--out", help="write a JSON report here")

    sub.add_parser("programs", help="list builtin workloads")
    return p


def _load_config(args):
    if getattr(args, "config", None):
        return cfgmod.load_config(args.config)
    return cfgmod.default_config()


def _ov(cfg, section, key, value):
    if value is not None:
        cfg[section][key] = value


def _resolve_workload(cfg):
    name = cfg["run"]["program"]
    if name in programs.BUILTINS:
        return programs.BUILTINS[name]()
    if name.endswith(".hex"):
        words = load_hex_file(name)
        base = cfg["core"]["reset_pc"]
        stem = os.path.splitext(os.path.basename(name))[0]
        return programs.Workload(name=stem, asm=[], base=base,
                                 reset_pc=base, raw_words=words)
    raise ConfigError(f"unknown program {name!r}; pick one of "
                      f"{', '.join(sorted(programs.BUILTINS))} or a .hex file")


def _fault_from_config(cfg):
    f = cfg["fault"]
    if not f["kind"]:
        return None
    # unspecified copy resolves per kind; an explicit contradiction
    # still reaches FaultSpec validation and errors out
    copy = f["copy"]
    if not copy:
        copy = "both" if f["kind"] == fl.KIND_CCF else "head"
    return fl.FaultSpec(kind=f["kind"], target=f["target"], cycle=f["cycle"],
                        bit=f["bit"], index=f["index"], copy=copy,
                        width=f["width"])


def _cmd_run(args):
    cfg = _load_config(args)
    _ov(cfg, "run", "program", args.program)
    _ov(cfg, "run", "stagger", args.stagger)
    _ov(cfg, "run", "sphere", args.sphere)
    _ov(cfg, "fault", "kind", args.fault_kind)
    _ov(cfg, "fault", "target", args.fault_target)
    _ov(cfg, "fault", "cycle", args.fault_cycle)
    _ov(cfg, "fault", "bit", args.fault_bit)
    _ov(cfg, "fault", "index", args.fault_reg)
    _ov(cfg, "fault", "copy", args.fault_copy)
    _ov(cfg, "fault", "width", args.fault_width)

    wl = _resolve_workload(cfg)
    stagger = cfg["run"]["stagger"]
    sphere = cfg["run"]["sphere"]
    spec = _fault_from_config(cfg)
    result = fl.run_with_fault(wl, spec, stagger, sphere=sphere)

    shown = "clean" if spec is None and result.outcome == fl.MASKED \
        else result.outcome
    print(f"workload  = {wl.name}")
    print(f"stagger   = {stagger}")
    print(f"sphere    = {sphere}")
    if spec is not None:
        where = f"reg x{spec.index}" if spec.target == fl.TARGET_REG else "pc"
        print(f"fault     = {spec.kind} {where} bit {spec.bit} "
              f"cycle {spec.cycle} copy {spec.copy}")
    print(f"outcome   = {shown}")
    if result.latency is not None:
        print(f"latency   = {result.latency}")
    if args.out:
        rep.write_json(args.out, rep.run_report(wl.name, stagger, sphere,
                                                spec, result))
        print(f"report    = {args.out}")
    return _OUTCOME_EXIT[result.outcome]


def _cmd_campaign(args):
    cfg = _load_config(args)
    _ov(cfg, "run", "program", args.program)
    _ov(cfg, "run", "stagger", args.stagger)
    _ov(cfg, "run", "sphere", args.sphere)
    _ov(cfg, "campaign", "kind", args.kind)
    _ov(cfg, "campaign", "count", args.count)
    _ov(cfg, "campaign", "seed", args.seed)
    if args.no_plots:
        cfg["report"]["plots"] = False

    wl = _resolve_workload(cfg)
    stagger = cfg["run"]["stagger"]
    sphere = cfg["run"]["sphere"]
    cc = cfg["campaign"]
    golden = fl.run_golden(wl)
    cycles = tuple(cc["cycles"]) or tuple(range(golden.halt_cycle))
    space = fl.FaultSpace(cycles=cycles, kind=cc["kind"],
                          targets=tuple(cc["targets"]),
                          regs=tuple(cc["regs"]), bits=tuple(cc["bits"]),
                          copies=tuple(cc["copies"]) or None,
                          width=cc["width"])
    camp = fl.run_campaign(wl, space, stagger, cc["count"], seed=cc["seed"],
                           sphere=sphere, golden=golden)
    digest = rep.config_digest(wl, stagger, sphere, space, cc["count"],
                               cc["seed"])

    for line in rep.summary_lines(camp):
        print(line)
    if args.out:
        rep.write_json(args.out, rep.campaign_report(camp, digest))
        base, _ = os.path.splitext(args.out)
        csv_path = base + ".records.csv"
        rep.write_csv(csv_path, camp)
        written = [args.out, csv_path]
        if cfg["report"]["plots"]:
            written.extend(figures.render_campaign_figures(camp, base))
        for path in written:
            print(f"wrote {path}")

    counts = camp.counts
    if counts[fl.SDC]:
        return EXIT_SDC
    if counts[fl.HANG]:
        return EXIT_HANG
    if counts[fl.DETECTED]:
        return EXIT_DETECTED
    return EXIT_CLEAN


def _cmd_feasibility(args):
    cfg = _load_config(args)
    _ov(cfg, "timing", "exec_cycles", args.exec_cycles)
    _ov(cfg, "timing", "deadline_cycles", args.deadline_cycles)
    _ov(cfg, "timing", "max_retries", args.max_retries)
    _ov(cfg, "timing", "detection_latency", args.detection_latency)
    t = cfg["timing"]
    spec = TimingSpec(exec_cycles=t["exec_cycles"],
                      deadline_cycles=t["deadline_cycles"],
                      max_retries=t["max_retries"],
                      detection_latency=t["detection_latency"])
    print(f"exec_cycles         = {spec.exec_cycles}")
    print(f"deadline_cycles     = {spec.deadline_cycles}")
    print(f"max_retries         = {spec.max_retries}")
    print(f"detection_latency   = {spec.detection_latency}")
    print(f"worst_case          = {spec.worst_case_completion()}")
    print(f"feasible            = {str(spec.feasible()).lower()}")
    if args.out:
        rep.write_json(args.out, rep.feasibility_report(spec))
        print(f"report              = {args.out}")
    return EXIT_CLEAN if spec.feasible() else EXIT_SDC


def _cmd_programs(_args):
    for name in sorted(programs.BUILTINS):
        print(name)
    return EXIT_CLEAN


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"run": _cmd_run, "campaign": _cmd_campaign,
               "feasibility": _cmd_feasibility,
               "programs": _cmd_programs}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
