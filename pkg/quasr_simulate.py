import logging
import time
from pathlib import Path

from data_modules.io import RunManifest, write_csv, write_json, write_matrix
from data_modules.simulate import GraphModelSpec, gen_copula_graph, gen_gaussian_graph

log = logging.getLogger(__name__)


def run_simulate(args) -> int:
    """``quasr simulate``: data.csv, truth_edges.csv, precision.csv and manifest.json."""
    manifest = RunManifest(command="simulate", config=vars(args).copy(), seed=args.seed)
    if args.n < 1:
        raise ValueError(f"Invalid sample size: {args.n}")
    spec = GraphModelSpec(kind=args.graph, d=args.d, p=args.p)

    tic = time.perf_counter()
    generate = gen_copula_graph if args.copula else gen_gaussian_graph
    sim = generate(spec, args.n, args.seed)
    manifest.stage("simulate", time.perf_counter() - tic)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "data.csv", sim.data.values)
    write_csv(out / "truth_edges.csv", ["i", "j"], sim.graph.sorted_edges())
    write_matrix(out / "precision.csv", sim.precision, prefix="omega")
    write_json(out / "manifest.json", manifest.to_dict())
    log.info("simulated %s graph d=%d with %d edges, n=%d -> %s", spec.kind.value, spec.d, len(sim.graph), args.n, out)
    return 0
