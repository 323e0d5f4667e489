"""Command-line entry point: ``verasel {keygen,simulate,verify,validate}``.

Exit codes: 0 success/match, 1 usage or config error, 2 verification
mismatch (or KS rejection), 3 degenerate epoch.

Output files
------------
simulate writes into --out:
  board.txt        bulletin-board transcript (versioned, line-oriented, hex)
  active_sets.csv  epoch,node_id,weight,selected,round,layer  (one row per roster member)
  epochs.csv       epoch,seed,provenance,proposer,members,rejected,selected,
                   cumulative_weight,total_weight,active_digest,agreed,degenerate
  rejected.csv     epoch,node_id,reason
  summary.txt      key = value run parameters, agreement and timings
validate writes into --out:
  frequencies_verasel.csv, frequencies_oracle.csv  node,selected_count,trials,frequency
  cdf_verasel.csv, cdf_oracle.csv                  x,cdf
  ks_report.txt                                    key = value summary
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .adversary import run_scenario
from .board import Board, BoardError
from .config import ConfigError, ScenarioConfig, load_config
from .crypto import BACKENDS, keygen, save_key
from .protocol import replay
from .selection import SelectionParameterError, parse_tau
from .stats import sample_bandwidths, write_cdf
from .validation import run_validation

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH, EXIT_DEGENERATE = 0, 1, 2, 3

log = logging.getLogger("verasel")


def _weights(cfg: ScenarioConfig, config_path: Path | None) -> list[int]:
    if cfg.weights_csv:
        path = Path(cfg.weights_csv)
        if config_path is not None and not path.is_absolute():
            path = config_path.parent / path
        return sample_bandwidths(cfg.nodes, path)
    return sample_bandwidths(
        cfg.nodes, rng_seed=cfg.rng_seed, mu=cfg.weight_mu, sigma=cfg.weight_sigma, target_mean=cfg.weight_mean
    )


def _prepare_out(out: Path, names: list[str], force: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    clash = [n for n in names if (out / n).exists()]
    if clash and not force:
        raise FileExistsError(f"{out}: would overwrite {', '.join(clash)} (use --force)")


def cmd_keygen(args) -> int:
    out = Path(args.out)
    names = [f"node{i:04d}.key" for i in range(args.count)]
    _prepare_out(out, names, args.force)
    for i, name in enumerate(names):
        seed = None if args.rng_seed is None else f"{args.rng_seed}:{i}".encode()
        save_key(keygen(seed), out / name, backend=args.backend or "ecvrf", force=args.force)
    print(f"wrote {len(names)} key file(s) to {out}")
    return EXIT_OK


SIM_FILES = ["board.txt", "active_sets.csv", "epochs.csv", "rejected.csv", "summary.txt"]


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.backend:
        cfg.backend = args.backend
    if args.rng_seed is not None:
        cfg.rng_seed = args.rng_seed
    out = Path(args.out)
    _prepare_out(out, SIM_FILES, args.force)
    weights = _weights(cfg, Path(args.config))
    nodes = list(zip(weights, cfg.profiles()))
    log.info("simulating %d nodes for %d epochs with the %s backend", len(nodes), cfg.epochs, cfg.backend)
    tr = run_scenario(
        nodes, cfg.epochs, cfg.tau, cfg.layers, cfg.rng_seed, cfg.backend, cfg.clients, cfg.proposer
    )
    tr.board.save(out / "board.txt")
    with open(out / "active_sets.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "node_id", "weight", "selected", "round", "layer"])
        for r in tr.epochs:
            chosen = {s.node_id: s for s in r.active.selected}
            layer_of = r.active.layer_of
            for m in r.roster.members:
                s = chosen.get(m.node_id)
                w.writerow(
                    [r.epoch, m.node_id.hex(), m.weight, int(s is not None),
                     s.round if s else "", layer_of[m.node_id] if s else ""]
                )
    with open(out / "epochs.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EPOCH_COLUMNS)
        for r in tr.epochs:
            w.writerow(_epoch_row(r.epoch, r.seed, r.roster, r.active) + [int(r.agreed), int(r.degenerate)])
    with open(out / "rejected.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "node_id", "reason"])
        for r in tr.epochs:
            for nid, reason in r.roster.rejected:
                w.writerow([r.epoch, nid.hex(), reason.value])

    setup_max = max((r.timings["setup_max_s"] for r in tr.epochs), default=0.0)
    select_max = max((r.timings["client_select_max_s"] for r in tr.epochs), default=0.0)
    summary = cfg.as_lines() + [
        f"selection_epochs = {len(tr.epochs)}",
        f"clients_agree = {tr.all_agreed}",
        f"degenerate_epochs = {' '.join(map(str, tr.degenerate_epochs)) or 'none'}",
        f"max_node_setup_seconds = {setup_max:.6f}",
        f"max_client_select_seconds = {select_max:.6f}",
        f"subsecond = {setup_max < 1.0 and select_max < 1.0}",
    ]
    (out / "summary.txt").write_text("\n".join(summary) + "\n")
    for line in summary[-6:]:
        print(line)
    if tr.degenerate_epochs:
        return EXIT_DEGENERATE
    return EXIT_OK if tr.all_agreed else EXIT_MISMATCH


EPOCH_COLUMNS = [
    "epoch", "seed", "provenance", "proposer", "members", "rejected", "selected",
    "cumulative_weight", "total_weight", "active_digest", "agreed", "degenerate",
]


def _epoch_row(epoch, seed_record, roster, active) -> list:
    return [
        epoch,
        seed_record.seed.hex(),
        seed_record.provenance.value,
        seed_record.proposer.hex() if seed_record.proposer else "",
        len(roster.members),
        len(roster.rejected),
        len(active.selected),
        active.cumulative_weight,
        active.total_weight,
        active.digest(),
    ]


def _read_summary(path: Path) -> dict[str, str]:
    if not path.exists():
        return {}
    pairs = (line.split("=", 1) for line in path.read_text().splitlines() if "=" in line)
    return {k.strip(): v.strip() for k, v in pairs}


def cmd_verify(args) -> int:
    board_path = Path(args.board_file)
    results = Path(args.results) if args.results else board_path.parent
    params = _read_summary(results / "summary.txt")
    try:
        tau = parse_tau(args.tau or params.get("tau", "1/2"))
    except SelectionParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    layers = int(args.layers or params.get("layers", 1))
    backend = args.backend or params.get("backend", "ecvrf")

    try:
        board = Board.load(board_path)
    except BoardError as exc:
        print(f"mismatch: transcript rejected: {exc}")
        return EXIT_MISMATCH

    claimed_epochs = {}
    epochs_csv = results / "epochs.csv"
    if epochs_csv.exists():
        with open(epochs_csv, newline="") as fh:
            for row in csv.DictReader(fh):
                claimed_epochs[int(row["epoch"])] = row
    claimed_sel: dict[int, dict[str, tuple]] = {}
    active_csv = results / "active_sets.csv"
    if active_csv.exists():
        with open(active_csv, newline="") as fh:
            for row in csv.DictReader(fh):
                if row["selected"] == "1":
                    claimed_sel.setdefault(int(row["epoch"]), {})[row["node_id"]] = (
                        int(row["weight"]), int(row["round"]), int(row["layer"])
                    )
    if not claimed_epochs:
        print(f"error: no claimed results found in {results}", file=sys.stderr)
        return EXIT_USAGE

    try:
        replayed = replay(board, tau, layers, backend)
    except Exception as exc:  # replay failure is a verdict, not a crash
        print(f"mismatch: replay failed: {exc}")
        return EXIT_MISMATCH
    by_epoch = {r.epoch: r for r in replayed}
    wanted = sorted(claimed_epochs) if args.epoch is None else [args.epoch]
    ok = True
    for epoch in wanted:
        problems = _compare_epoch(epoch, by_epoch.get(epoch), claimed_epochs.get(epoch), claimed_sel.get(epoch, {}))
        if problems:
            ok = False
            print(f"epoch {epoch}: mismatch: " + "; ".join(problems))
        else:
            print(f"epoch {epoch}: match")
    print("verdict: " + ("match" if ok else "mismatch"))
    return EXIT_OK if ok else EXIT_MISMATCH


def _compare_epoch(epoch, rep, claimed_row, claimed_sel) -> list[str]:
    if rep is None:
        return ["epoch not present in transcript"]
    if claimed_row is None:
        return ["no claimed result for this epoch"]
    problems = []
    expected = [str(x) for x in _epoch_row(epoch, rep.seed, rep.roster, rep.active)]
    for col, got in zip(EPOCH_COLUMNS, expected):
        if claimed_row.get(col) != got:
            problems.append(f"{col} claimed {claimed_row.get(col)!r} recomputed {got!r}")
    recomputed = {
        s.node_id.hex(): (s.weight, s.round, rep.active.layer_of.get(s.node_id, 0)) for s in rep.active.selected
    }
    for nid in sorted(recomputed.keys() | claimed_sel.keys()):
        if recomputed.get(nid) != claimed_sel.get(nid):
            problems.append(f"node {nid}: claimed {claimed_sel.get(nid)} recomputed {recomputed.get(nid)}")
    for nid, reason in rep.roster.rejected:
        if nid.hex() in claimed_sel:
            problems.append(f"node {nid.hex()} rejected ({reason.value})")
    return problems


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    if args.backend:
        cfg.backend = args.backend
    if args.rng_seed is not None:
        cfg.rng_seed = args.rng_seed
    trials_a = args.trials_a or cfg.trials_a
    trials_b = args.trials_b or cfg.trials_b
    alpha = args.alpha or cfg.alpha
    weights = _weights(cfg, Path(args.config))
    report = run_validation(weights, cfg.tau, trials_a, trials_b, alpha, cfg.rng_seed, cfg.backend, cfg.control)
    lines = [f"total_weight={sum(weights)}", f"tau={cfg.tau}", f"backend={cfg.backend}"] + report.summary_lines()
    conclusive = trials_a >= 2 and trials_b >= 2
    if not conclusive:
        lines = [l for l in lines if not l.startswith("verdict=")]
        lines += ["verdict=INCONCLUSIVE", "note=fewer than 2 trials per arm; acceptance not asserted"]
    if args.out:
        out = Path(args.out)
        names = ["frequencies_verasel.csv", "frequencies_oracle.csv", "cdf_verasel.csv", "cdf_oracle.csv", "ks_report.txt"]
        _prepare_out(out, names, args.force)
        report.verasel.write_csv(out / names[0])
        report.oracle.write_csv(out / names[1])
        write_cdf(report.verasel.frequencies, out / names[2])
        write_cdf(report.oracle.frequencies, out / names[3])
        (out / names[4]).write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    if not conclusive:
        return EXIT_OK
    return EXIT_OK if report.accept else EXIT_MISMATCH


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for a mismatch here.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="verasel",
        description="Verifiable weighted selection of mixnode active sets.",
        epilog=__doc__.split("Output files", 1)[1],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="key = value scenario file")
        sp.add_argument("--backend", choices=sorted(BACKENDS), help="VRF backend (default: ecvrf)")
        sp.add_argument("--rng-seed", type=int, help="seed for every random choice")
        sp.add_argument("--force", action="store_true", help="overwrite existing output files")

    kg = sub.add_parser("keygen", help="write key files")
    common(kg, config=False)
    kg.add_argument("--out", required=True)
    kg.add_argument("--count", type=int, default=1)
    kg.set_defaults(func=cmd_keygen)

    sim = sub.add_parser("simulate", help="run a multi-epoch scenario and write its transcript")
    common(sim)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="replay a transcript and check the claimed results")
    ver.add_argument("--board-file", required=True)
    ver.add_argument("--results", help="directory with epochs.csv/active_sets.csv (default: board's directory)")
    ver.add_argument("--epoch", type=int, help="check only this epoch")
    ver.add_argument("--backend", choices=sorted(BACKENDS))
    ver.add_argument("--tau")
    ver.add_argument("--layers", type=int)
    ver.set_defaults(func=cmd_verify)

    val = sub.add_parser("validate", help="KS comparison of VeraSel against the trusted oracle")
    common(val)
    val.add_argument("--out")
    val.add_argument("--trials-a", type=int)
    val.add_argument("--trials-b", type=int)
    val.add_argument("--alpha", type=float)
    val.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SelectionParameterError, FileExistsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
