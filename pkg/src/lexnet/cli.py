"""Command-line pipeline: ingest -> vocab -> train -> build-wcn/build-wsn -> stats -> report.

Every stage reads the artifacts of earlier stages from the output directory
and writes its own, so a run can be resumed at any stage. Each artifact is
accompanied by (or, for JSON, embeds) the hash of the configuration and the
seed that produced it.

Exit status: 0 on success, 1 on configuration errors, 2 on runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import logging
import sys
from pathlib import Path

from .corpus import (
    FORMATS,
    CorpusError,
    NormalizationConfig,
    build_vocabulary,
    ingest_corpus,
    load_vocabulary,
    sample_vocabulary,
    save_vocabulary,
    write_corpus,
)
from .embedding import EmbeddingError, TrainingConfig, load_embeddings, save_embeddings, train_sgns
from .graph import (
    GraphError,
    build_wcn,
    build_wsn,
    estimate_similarity_threshold,
    load_graph,
    save_graph,
)
from .netstats import (
    UNDEFINED,
    PowerLawFit,
    StatsConfig,
    StatsError,
    StructureReport,
    TwoRegimeFit,
    degree_distribution,
    degree_plot_csv,
    log_binned,
    structure_report,
)

log = logging.getLogger("lexnet")

SUBCOMMANDS = ("ingest", "vocab", "train", "build-wcn", "build-wsn", "stats", "report", "pipeline")
NETWORKS = ("wcn", "wsn")


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))
        self.problems = problems


class MissingArtifact(RuntimeError):
    pass


# -- configuration -----------------------------------------------------------

def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_optional_int(s: str) -> int | None:
    return None if s.strip().lower() in ("", "none") else int(s)


def _parse_ranges(s: str) -> tuple[tuple[int, int], ...]:
    out = []
    for part in s.split(","):
        lo, hi = part.strip().split("-")
        out.append((int(lo, 16), int(hi, 16)))
    return tuple(out)


_SCALARS = {
    "ideograph_ranges": _parse_ranges,
    "min_count": int,
    "wcn_sample_fraction": float,
    "wsn_sample_fraction": float,
    "seed": int,
    "window": int,
    "dim": int,
    "negatives": int,
    "epochs": int,
    "initial_lr": float,
    "subsample": float,
    "threshold_percentile": float,
    "threshold_sample_size": int,
    "threshold_exhaustive": _parse_bool,
    "wcn_window": _parse_optional_int,
    "max_unique_tokens": _parse_optional_int,
    "ratio_threshold": float,
    "neutral_band": float,
    "log_bins": _parse_bool,
    "bins_per_decade": int,
    "output_dir": str,
    "threads": int,
}


@dataclasses.dataclass
class PipelineConfig:
    """Settings for every stage, read from a flat ``key = value`` file.

    Corpora are declared as ``corpus.<label> = <path>`` with an optional
    ``format.<label> = pretokenized-lines | token-json-lines``. The shorthand
    ``sample_fraction`` sets both per-network vocabulary fractions. Relative
    paths resolve against the config file's directory.
    """

    corpora: dict = dataclasses.field(default_factory=dict)
    ideograph_ranges: tuple = NormalizationConfig().ideograph_ranges
    min_count: int = 3
    wcn_sample_fraction: float = 0.1
    wsn_sample_fraction: float = 0.1
    seed: int = 0
    window: int = 10
    dim: int = 500
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    subsample: float = 0.0
    threshold_percentile: float = 99.0
    threshold_sample_size: int = 10_000_000
    threshold_exhaustive: bool = False
    wcn_window: int | None = None
    max_unique_tokens: int | None = None
    ratio_threshold: float = 10.0
    neutral_band: float = 0.05
    log_bins: bool = False
    bins_per_decade: int = 10
    output_dir: str = "lexnet-out"
    threads: int = 1
    base_dir: Path = dataclasses.field(default_factory=Path.cwd, compare=False)

    @classmethod
    def from_pairs(cls, pairs: list[tuple[int | None, str, str]], base_dir: Path) -> "PipelineConfig":
        cfg = cls(base_dir=base_dir)
        problems = cfg.update(pairs)
        if problems:
            raise ConfigError(problems)
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError([f"config: cannot read {path}: {exc.strerror}"]) from None
        pairs = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError([f"{path}:{lineno}: expected 'key = value'"])
            key, value = (s.strip() for s in line.split("=", 1))
            pairs.append((lineno, key, value))
        return cls.from_pairs(pairs, path.resolve().parent)

    def update(self, pairs) -> list[str]:
        """Apply ``(lineno, key, value)`` triples; return a list of problems."""
        problems = []
        for lineno, key, value in pairs:
            where = f"line {lineno}: " if lineno else ""
            try:
                if key.startswith("corpus."):
                    label = key[len("corpus."):]
                    fmt = self.corpora.get(label, (None, "pretokenized-lines"))[1]
                    self.corpora[label] = (value, fmt)
                elif key.startswith("format."):
                    label = key[len("format."):]
                    path = self.corpora.get(label, (None, None))[0]
                    self.corpora[label] = (path, value)
                elif key == "sample_fraction":
                    self.wcn_sample_fraction = self.wsn_sample_fraction = float(value)
                elif key in _SCALARS:
                    setattr(self, key, _SCALARS[key](value))
                else:
                    problems.append(f"{where}unknown key {key!r}")
            except ValueError as exc:
                problems.append(f"{where}{key}: {exc}")
        return problems

    def validate(self) -> None:
        """Raise ConfigError listing every violated field."""
        p = []
        if not self.corpora:
            p.append("corpora: at least one 'corpus.<label> = path' is required")
        for label, (path, fmt) in self.corpora.items():
            if not label or "/" in label:
                p.append(f"corpus label {label!r} is not a plain name")
            if path is None:
                p.append(f"format.{label}: no matching corpus.{label}")
            elif not self.corpus_path(label).is_file():
                p.append(f"corpus.{label}: file not found: {self.corpus_path(label)}")
            if fmt not in FORMATS:
                p.append(f"format.{label}: must be one of {', '.join(FORMATS)}")
        try:
            NormalizationConfig(self.ideograph_ranges)
        except ValueError as exc:
            p.append(f"ideograph_ranges: {exc}")
        checks = [
            ("min_count", self.min_count >= 0, ">= 0"),
            ("wcn_sample_fraction", 0 < self.wcn_sample_fraction <= 1, "in (0, 1]"),
            ("wsn_sample_fraction", 0 < self.wsn_sample_fraction <= 1, "in (0, 1]"),
            ("seed", self.seed >= 0, ">= 0"),
            ("window", self.window >= 1, ">= 1"),
            ("dim", self.dim >= 1, ">= 1"),
            ("negatives", self.negatives >= 1, ">= 1"),
            ("epochs", self.epochs >= 0, ">= 0"),
            ("initial_lr", self.initial_lr > 0, "> 0"),
            ("subsample", self.subsample >= 0, ">= 0"),
            ("threshold_percentile", 0 < self.threshold_percentile < 100, "in (0, 100)"),
            ("threshold_sample_size", self.threshold_sample_size >= 1000, ">= 1000"),
            ("wcn_window", self.wcn_window is None or self.wcn_window >= 1, ">= 1 or none"),
            ("max_unique_tokens", self.max_unique_tokens is None or self.max_unique_tokens >= 2, ">= 2 or none"),
            ("ratio_threshold", self.ratio_threshold > 1, "> 1"),
            ("neutral_band", self.neutral_band > 0, "> 0"),
            ("bins_per_decade", self.bins_per_decade >= 1, ">= 1"),
            ("threads", self.threads >= 1, ">= 1"),
        ]
        p.extend(f"{name}: must be {rule}" for name, ok, rule in checks if not ok)
        if p:
            raise ConfigError(p)

    def corpus_path(self, label: str) -> Path:
        return self.base_dir / self.corpora[label][0]

    @property
    def out(self) -> Path:
        return self.base_dir / self.output_dir

    @property
    def normalization(self) -> NormalizationConfig:
        return NormalizationConfig(self.ideograph_ranges)

    @property
    def training(self) -> TrainingConfig:
        return TrainingConfig(self.window, self.dim, self.negatives, self.epochs,
                              self.initial_lr, self.seed, self.subsample)

    @property
    def stats(self) -> StatsConfig:
        return StatsConfig(self.ratio_threshold, self.neutral_band, self.log_bins, self.bins_per_decade)

    def canonical(self) -> dict:
        """Result-relevant settings; corpora are identified by content hash."""
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)
             if f.name not in ("corpora", "output_dir", "base_dir")}
        d["ideograph_ranges"] = [list(r) for r in self.ideograph_ranges]
        d["corpora"] = {
            label: {"format": fmt, "sha256": _file_sha256(self.corpus_path(label))}
            for label, (_, fmt) in sorted(self.corpora.items())
        }
        return d

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# -- artifacts ---------------------------------------------------------------

class Run:
    """Paths and provenance for one configured run."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.config_hash = cfg.hash()

    def dir(self, label: str) -> Path:
        d = self.cfg.out / label
        d.mkdir(parents=True, exist_ok=True)
        return d

    def path(self, label: str, name: str) -> Path:
        return self.cfg.out / label / name

    def provenance(self, stage: str) -> dict:
        return {"stage": stage, "config_hash": self.config_hash, "seed": self.cfg.seed}

    def stamp(self, path: Path, stage: str) -> None:
        meta = dict(self.provenance(stage), artifact=path.name)
        _write_text(path.with_name(path.name + ".meta.json"), _dumps(meta))

    def require(self, label: str, name: str, what: str, stage: str) -> Path:
        path = self.path(label, name)
        if not path.exists():
            raise MissingArtifact(f"{what} not found; run {stage} (missing {path})")
        meta = path.with_name(path.name + ".meta.json")
        if meta.exists():
            recorded = json.loads(meta.read_text(encoding="utf-8")).get("config_hash")
            if recorded != self.config_hash:
                log.warning("%s was produced by a different configuration (%s)", path, recorded)
        return path


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def network_name(kind: str, label: str) -> str:
    return f"{kind.upper()}-{label}"


# -- stages ------------------------------------------------------------------

def stage_ingest(run: Run, label: str) -> None:
    cfg = run.cfg
    c = ingest_corpus(cfg.corpus_path(label), cfg.corpora[label][1], cfg.normalization, label=label)
    out = run.dir(label) / "corpus.jsonl"
    write_corpus(c, out)
    run.stamp(out, "ingest")
    log.info("%s: %d texts, %d tokens, %d dropped", label, len(c), c.n_tokens, c.dropped)


def _load_corpus(run: Run, label: str):
    path = run.require(label, "corpus.jsonl", "corpus", "ingest")
    return ingest_corpus(path, "token-json-lines", run.cfg.normalization, label=label)


def _load_vocab(run: Run, label: str):
    path = run.require(label, "vocab.tsv", "vocabulary", "vocab")
    return load_vocabulary(path, run.cfg.min_count)


def stage_vocab(run: Run, label: str) -> None:
    vocab = build_vocabulary(_load_corpus(run, label), run.cfg.min_count)
    out = run.dir(label) / "vocab.tsv"
    save_vocabulary(vocab, out)
    run.stamp(out, "vocab")
    log.info("%s: vocabulary of %d words", label, len(vocab))


def stage_train(run: Run, label: str) -> None:
    c = _load_corpus(run, label)
    vocab = _load_vocab(run, label)
    m = train_sgns(c, vocab, run.cfg.training, threads=run.cfg.threads)
    out = run.dir(label) / "embeddings.txt"
    save_embeddings(m, out)
    run.stamp(out, "train")


def stage_build_wcn(run: Run, label: str) -> None:
    cfg = run.cfg
    c = _load_corpus(run, label)
    subset = sample_vocabulary(_load_vocab(run, label), cfg.wcn_sample_fraction, cfg.seed)
    g = build_wcn(c, subset, window=cfg.wcn_window, max_unique_tokens=cfg.max_unique_tokens,
                  threads=cfg.threads)
    g.check_invariants()
    d = run.dir(label)
    save_vocabulary(subset, d / "wcn.vocab.tsv")
    run.stamp(d / "wcn.vocab.tsv", "build-wcn")
    save_graph(g, d / "wcn.graph")
    run.stamp(d / "wcn.graph", "build-wcn")


def stage_build_wsn(run: Run, label: str) -> None:
    cfg = run.cfg
    emb_path = run.require(label, "embeddings.txt", "embeddings", "train")
    vocab = _load_vocab(run, label)
    m = load_embeddings(emb_path, vocab)
    subset = sample_vocabulary(vocab, cfg.wsn_sample_fraction, cfg.seed)
    thr = estimate_similarity_threshold(
        m, subset, cfg.threshold_percentile, cfg.threshold_sample_size, cfg.seed,
        exhaustive=cfg.threshold_exhaustive,
    )
    g = build_wsn(m, subset, thr)
    g.check_invariants()
    d = run.dir(label)
    save_vocabulary(subset, d / "wsn.vocab.tsv")
    run.stamp(d / "wsn.vocab.tsv", "build-wsn")
    _write_text(d / "wsn.threshold.json", _dumps(dict(run.provenance("build-wsn"), **dataclasses.asdict(thr))))
    save_graph(g, d / "wsn.graph")
    run.stamp(d / "wsn.graph", "build-wsn")


def analyze_graph(g, stats: StatsConfig, name: str):
    """Report plus degree-plot CSV for one graph."""
    report = structure_report(g, stats, name=name)
    try:
        d = degree_distribution(g)
        if stats.log_bins:
            d = log_binned(d, stats.bins_per_decade)
        plot = degree_plot_csv(d, report.power_law, report.two_regime)
    except StatsError:
        plot = "k,p,power_fit,two_regime_fit\n"
    return report, plot


def stage_stats(run: Run, label: str) -> None:
    for kind in NETWORKS:
        stage = f"build-{kind}"
        path = run.require(label, f"{kind}.graph", f"{kind.upper()} graph", stage)
        report, plot = analyze_graph(load_graph(path), run.cfg.stats, network_name(kind, label))
        d = run.dir(label)
        _write_text(d / f"{kind}.report.json", _dumps(dict(run.provenance("stats"), **report.to_dict())))
        _write_text(d / f"{kind}.degree.csv", plot)
        run.stamp(d / f"{kind}.degree.csv", "stats")


def stage_report(run: Run) -> None:
    reports = []
    for label in run.cfg.corpora:
        for kind in NETWORKS:
            path = run.require(label, f"{kind}.report.json", f"{kind.upper()} report", "stats")
            reports.append(report_from_dict(json.loads(path.read_text(encoding="utf-8"))))
    text, table_csv = emit_summary_table(reports)
    out = run.cfg.out
    header = f"# config_hash {run.config_hash} seed {run.cfg.seed}\n"
    _write_text(out / "summary.txt", header + text)
    _write_text(out / "summary.csv", table_csv)
    run.stamp(out / "summary.csv", "report")
    print(text, end="")


def report_from_dict(d: dict) -> StructureReport:
    fields = {f.name for f in dataclasses.fields(StructureReport)}
    kw = {k: v for k, v in d.items() if k in fields}
    if kw.get("power_law"):
        kw["power_law"] = PowerLawFit(**kw["power_law"])
    if kw.get("two_regime"):
        kw["two_regime"] = TwoRegimeFit(**kw["two_regime"])
    if kw.get("small_world") == UNDEFINED:
        kw["small_world"] = None
    return StructureReport(**kw)


# -- summary table -----------------------------------------------------------

SUMMARY_COLUMNS = (
    "network", "degree_distribution", "small_worldness", "assortativity",
    "nodes", "edges", "power_law_ssr", "power_law_aic", "two_regime_ssr", "two_regime_aic",
    "cc", "er_cc", "dac",
)


def _summary_row(r: StructureReport) -> list:
    sw = UNDEFINED if r.small_world is None else ("small world" if r.small_world else "not small world")
    pl, tr = r.power_law, r.two_regime
    return [
        r.name, r.degree_class, sw, r.assortativity_class, r.n_nodes, r.n_edges,
        pl.ssr if pl else None, pl.aic if pl else None,
        tr.ssr if tr else None, tr.aic if tr else None,
        r.cc, r.er_cc, r.dac,
    ]


def emit_summary_table(reports: list[StructureReport]) -> tuple[str, str]:
    """Render one row per network as an aligned text table and as CSV.

    Undefined values appear as ``undefined`` in both renderings.
    """
    if not reports:
        raise ValueError("no reports to summarise")
    rows = [_summary_row(r) for r in reports]

    def cell(v, precise):
        if v is None:
            return UNDEFINED
        if isinstance(v, float):
            return repr(v) if precise else f"{v:.4g}"
        return str(v)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([cell(v, True) for v in row])

    cells = [list(SUMMARY_COLUMNS)] + [[cell(v, False) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(SUMMARY_COLUMNS))]
    lines = ["  ".join(c.ljust(wd) for c, wd in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * wd for wd in widths))
    return "\n".join(lines) + "\n", buf.getvalue()


# -- entry point -------------------------------------------------------------

PER_CORPUS = {
    "ingest": stage_ingest,
    "vocab": stage_vocab,
    "train": stage_train,
    "build-wcn": stage_build_wcn,
    "build-wsn": stage_build_wsn,
    "stats": stage_stats,
}


def run_subcommand(name: str, cfg: PipelineConfig, labels: list[str] | None = None) -> None:
    """Run one stage (or the whole ``pipeline``) for the configured corpora."""
    if name not in SUBCOMMANDS:
        raise ValueError(f"unknown subcommand {name!r}")
    cfg.validate()
    run = Run(cfg)
    labels = labels or list(cfg.corpora)
    unknown = [l for l in labels if l not in cfg.corpora]
    if unknown:
        raise ConfigError([f"--corpus: unknown label {l!r}" for l in unknown])
    if name == "pipeline":
        stages = list(PER_CORPUS)
    else:
        stages = [name] if name in PER_CORPUS else []
    for stage in stages:
        for label in labels:
            log.info("%s: %s", stage, label)
            PER_CORPUS[stage](run, label)
    if name in ("report", "pipeline"):
        stage_report(run)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lexnet", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, help="1 (default) guarantees determinism")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any configuration key; repeatable")
        p.add_argument("--corpus", action="append", metavar="LABEL", help="restrict to these corpora")
        if name == "stats":
            p.add_argument("--graph", help="analyse this graph file instead of the configured ones")
            p.add_argument("--name", default="", help="network name for --graph")
            p.add_argument("--report", help="write the --graph report here instead of stdout")
    return ap


def _config_from_args(args) -> PipelineConfig:
    if args.config:
        cfg = PipelineConfig.from_file(args.config)
    else:
        cfg = PipelineConfig()
    overrides = []
    for item in args.set:
        if "=" not in item:
            raise ConfigError([f"--set {item!r}: expected KEY=VALUE"])
        k, v = item.split("=", 1)
        overrides.append((None, k.strip(), v.strip()))
    if args.seed is not None:
        overrides.append((None, "seed", str(args.seed)))
    if args.threads is not None:
        overrides.append((None, "threads", str(args.threads)))
    problems = cfg.update(overrides)
    if args.out is not None:
        cfg.output_dir = str(Path(args.out).resolve())
    if problems:
        raise ConfigError(problems)
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config_from_args(args)
        if args.command == "stats" and args.graph:
            report, _ = analyze_graph(load_graph(args.graph), cfg.stats, args.name)
            meta = {"stage": "stats", "config_hash": cfg.hash(), "seed": cfg.seed}
            text = _dumps(dict(meta, **report.to_dict()))
            if args.report:
                _write_text(Path(args.report), text)
            else:
                sys.stdout.write(text)
            return 0
        run_subcommand(args.command, cfg, args.corpus)
    except ConfigError as exc:
        print(f"lexnet: {exc}", file=sys.stderr)
        return 1
    except (MissingArtifact, CorpusError, EmbeddingError, GraphError, StatsError, OSError) as exc:
        print(f"lexnet: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
