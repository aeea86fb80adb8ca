//! `posort`: generate poset instances, run the sorters against hidden-order
//! or adversary oracles, query entropies, and sweep the query-count bounds.
//!
//! Machine-readable output is one JSON object per line; exit code 0 means
//! every requested check passed.

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use posort_core::entropy::{
    convex_bipartite_entropy, greedy_point, km_partition_bruteforce,
    point_entropy,
};
use posort_core::instances::enumerate_two_chain_posets;
use posort_core::merge::{hwang_lin_bound, hwang_lin_merge};
use posort_core::mupi::{build_two_chain_cover, mupi};
use posort_core::oracle::{level_intervals, AdversaryOracle, HiddenOrderOracle};
use posort_core::poset::{
    add_chain_relations, count_linear_extensions, greedy_chain_decomposition, linear_extensions,
    log2_extensions, parse_poset_text, poset_to_text, random_poset, random_topological_order,
    sample_linear_extension, Chain, Poset, EXTENSION_GUARD,
};
use posort_core::sort::{merge_sort_eps_bound, run_sorter, SortResult, CAUTIOUS_FACTOR};

#[derive(Parser)]
#[command(name = "posort", about = "Sorting under partial information", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Algo {
    Insertion,
    Merge,
    Cautious,
    Preprocessed,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Insertion => "insertion",
            Algo::Merge => "merge",
            Algo::Cautious => "cautious",
            Algo::Preprocessed => "preprocessed",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random poset instance and write it in the text format.
    Gen {
        /// Output file path.
        out: std::path::PathBuf,
        #[arg(long)]
        n: usize,
        /// Probability of keeping each forward pair before closure.
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sort a poset instance against an oracle.
    Sort {
        /// Poset file in the text format.
        poset: std::path::PathBuf,
        #[arg(long, value_enum, default_value_t = Algo::Cautious)]
        algo: Algo,
        /// `hidden:<seed>` for a random hidden linear extension, or
        /// `adversary` for the interval-halving adversary.
        #[arg(long, default_value = "hidden:0")]
        oracle: String,
        /// Emit one JSON object instead of the human summary.
        #[arg(long)]
        json: bool,
        /// Also check the query bound against log2 e(P) where computable.
        #[arg(long)]
        verify: bool,
    },
    /// Entropy of the instance's incomparability structure.
    Entropy {
        poset: std::path::PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Sweep the query-count bounds on exhaustive small instances.
    Verify {
        /// Largest instance size in the sweeps (at most 10).
        #[arg(long, default_value_t = 6)]
        max_n: usize,
        /// Worker threads for the sorter sweep.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

/// One sorter run in machine-readable form.
#[derive(Serialize)]
struct RunReport {
    n: usize,
    algorithm: String,
    oracle: String,
    seed: Option<u64>,
    comparisons: u64,
    bound_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    log2_extensions: Option<f64>,
    elapsed_ms: f64,
    verified: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen {
            out,
            n,
            density,
            seed,
        } => cmd_gen(&out, n, density, seed),
        Command::Sort {
            poset,
            algo,
            oracle,
            json,
            verify,
        } => cmd_sort(&poset, algo, &oracle, json, verify),
        Command::Entropy { poset, json } => cmd_entropy(&poset, json),
        Command::Verify { max_n, jobs } => cmd_verify(max_n, jobs),
    }
}

fn cmd_gen(out: &std::path::Path, n: usize, density: f64, seed: u64) -> ExitCode {
    if !(0.0..=1.0).contains(&density) {
        eprintln!("density must lie in [0, 1]");
        return ExitCode::FAILURE;
    }
    let p = random_poset(n, density, seed);
    let text = format!(
        "# posort instance: n={n} density={density} seed={seed}\n{}",
        poset_to_text(&p)
    );
    match fs::write(out, text) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("cannot write {}: {err}", out.display());
            ExitCode::FAILURE
        }
    }
}

fn load_poset(path: &std::path::Path) -> Result<Poset, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_poset_text(&text).map_err(|e| e.to_string())
}

/// Oracle wrapper so the two oracle kinds share the sorter call.
enum OracleKind {
    Hidden {
        oracle: HiddenOrderOracle,
        order: Vec<usize>,
    },
    Adversary {
        oracle: AdversaryOracle,
    },
}

fn cmd_sort(
    path: &std::path::Path,
    algo: Algo,
    oracle: &str,
    json: bool,
    verify: bool,
) -> ExitCode {
    let p = match load_poset(path) {
        Ok(p) => p,
        Err(err) => {
            eprintln!("{err}");
            return ExitCode::FAILURE;
        }
    };
    let n = p.len();
    let (mut kind, seed) = if oracle == "adversary" {
        (
            OracleKind::Adversary {
                oracle: AdversaryOracle::new(&p, level_intervals(&p)),
            },
            None,
        )
    } else if let Some(seed_text) = oracle.strip_prefix("hidden:") {
        let Ok(seed) = seed_text.parse::<u64>() else {
            eprintln!("bad oracle spec `{oracle}`; expected hidden:<seed> or adversary");
            return ExitCode::FAILURE;
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Uniform over linear extensions within the counting guard, random
        // topological shuffle (non-uniform) beyond it.
        let order = if n <= EXTENSION_GUARD {
            sample_linear_extension(&p, &mut rng).expect("within guard")
        } else {
            random_topological_order(&p, &mut rng)
        };
        let oracle = HiddenOrderOracle::new(&order, &p).expect("sampled order extends the poset");
        (OracleKind::Hidden { oracle, order }, Some(seed))
    } else {
        eprintln!("bad oracle spec `{oracle}`; expected hidden:<seed> or adversary");
        return ExitCode::FAILURE;
    };

    let start = Instant::now();
    let result: SortResult = match &mut kind {
        OracleKind::Hidden { oracle, .. } => run_sorter(algo.name(), &p, oracle),
        OracleKind::Adversary { oracle } => run_sorter(algo.name(), &p, oracle),
    }
    .expect("cover construction cannot fail on a closed poset");
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;

    // Output verification: a hidden order must be recovered exactly; against
    // the adversary the output must extend the base poset and all answers.
    let output_ok = match &kind {
        OracleKind::Hidden { order, .. } => &result.order == order,
        OracleKind::Adversary { oracle } => {
            let mut known = p.clone();
            let mut ok = true;
            for w in result.order.windows(2) {
                match add_chain_relations(&known, &Chain::new(vec![w[0], w[1]])) {
                    Ok(next) => known = next,
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            ok && oracle.intervals().is_consistent_with(&known)
        }
    };

    let log2_ext = log2_extensions(&p).ok();
    let mut bounds_ok = result.comparisons as f64 <= result.bound_value + 1e-9;
    if verify {
        if let Some(log_e) = log2_ext {
            if matches!(algo, Algo::Cautious | Algo::Preprocessed) {
                bounds_ok &= result.comparisons as f64 <= CAUTIOUS_FACTOR * log_e + 1e-9;
            }
        }
    }
    let verified = output_ok && bounds_ok;

    let report = RunReport {
        n,
        algorithm: algo.name().to_string(),
        oracle: if seed.is_some() {
            "hidden".into()
        } else {
            "adversary".into()
        },
        seed,
        comparisons: result.comparisons,
        bound_value: result.bound_value,
        log2_extensions: if verify { log2_ext } else { None },
        elapsed_ms,
        verified,
    };
    if json {
        println!("{}", serde_json::to_string(&report).unwrap());
    } else {
        println!(
            "{} on n={} ({} oracle): {} comparisons, bound {:.2},{} {}",
            report.algorithm,
            report.n,
            report.oracle,
            report.comparisons,
            report.bound_value,
            match report.log2_extensions {
                Some(l) => format!(" log2 e(P) = {l:.3},"),
                None => String::new(),
            },
            if verified { "verified" } else { "FAILED" },
        );
        for note in &result.phase_breakdown {
            println!("  [{}] {}", note.phase, note.note);
        }
    }
    if verified {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

#[derive(Serialize)]
struct EntropyReport {
    n: usize,
    /// `n H` for the graph named in `graph`.
    n_entropy: f64,
    /// Which bipartite graph the exact value refers to.
    graph: String,
    /// Exact for the full incomparability graph only when the poset has
    /// width at most 2.
    exact_for_incomparability_graph: bool,
    /// Greedy-point upper bound on `n H` for the full incomparability graph.
    greedy_upper_bound: f64,
}

fn cmd_entropy(path: &std::path::Path, json: bool) -> ExitCode {
    let p = match load_poset(path) {
        Ok(p) => p,
        Err(err) => {
            eprintln!("{err}");
            return ExitCode::FAILURE;
        }
    };
    let n = p.len();
    if n == 0 {
        eprintln!("empty instance");
        return ExitCode::FAILURE;
    }
    let decomposition = greedy_chain_decomposition(&p);
    let greedy_upper = n as f64 * point_entropy(&greedy_point(&decomposition));

    // Width ≤ 2 (detected by the greedy cover attempt): the exact entropy of
    // the incomparability graph. Otherwise split off a maximum chain and
    // report the exact entropy of the chain-versus-rest bipartite subgraph.
    let report = if decomposition.chains.len() <= 2 {
        let a = decomposition.chains[0].clone();
        let b = decomposition
            .chains
            .get(1)
            .cloned()
            .unwrap_or_else(|| Chain::new(Vec::new()));
        let cover = build_two_chain_cover(&p, &a, &b).expect("greedy chains cover the poset");
        let (part, _) = convex_bipartite_entropy(&cover.graph());
        EntropyReport {
            n,
            n_entropy: n as f64 * part.entropy,
            graph: "incomparability graph (width <= 2)".into(),
            exact_for_incomparability_graph: true,
            greedy_upper_bound: greedy_upper,
        }
    } else {
        let pre = posort_core::sort::preprocess(&p);
        let (part, _) = convex_bipartite_entropy(&pre.graph);
        EntropyReport {
            n,
            n_entropy: n as f64 * part.entropy,
            graph: "maximum chain versus rest (approximate only)".into(),
            exact_for_incomparability_graph: false,
            greedy_upper_bound: greedy_upper,
        }
    };
    if json {
        println!("{}", serde_json::to_string(&report).unwrap());
    } else {
        println!(
            "n = {}, nH = {:.6} for the {}; greedy upper bound nH(x) = {:.6}",
            report.n, report.n_entropy, report.graph, report.greedy_upper_bound
        );
    }
    ExitCode::SUCCESS
}

struct Sweep {
    name: &'static str,
    checked: u64,
    violations: u64,
}

impl Sweep {
    fn report(&self) -> bool {
        let ok = self.violations == 0;
        println!(
            "{:<44} {:>9} checks, {} violations [{}]",
            self.name,
            self.checked,
            self.violations,
            if ok { "ok" } else { "FAILED" }
        );
        ok
    }
}

fn cmd_verify(max_n: usize, jobs: usize) -> ExitCode {
    if max_n > 10 {
        eprintln!("--max-n is limited to 10");
        return ExitCode::FAILURE;
    }
    let start = Instant::now();
    let mut sweeps = Vec::new();

    // Entropy versus extension count on width-2 instances.
    let mut entropy_sweep = Sweep {
        name: "entropy vs extensions (width <= 2)",
        checked: 0,
        violations: 0,
    };
    let mut equivalence = Sweep {
        name: "entropy oracle equivalence",
        checked: 0,
        violations: 0,
    };
    for n in 1..=max_n.min(8) {
        for (p, a, b) in enumerate_two_chain_posets(n) {
            let cover = build_two_chain_cover(&p, &a, &b).unwrap();
            let graph = cover.graph();
            let (part, _) = convex_bipartite_entropy(&graph);
            let nh = n as f64 * part.entropy;
            let log_e = log2_extensions(&p).unwrap();
            entropy_sweep.checked += 1;
            if log_e > nh + 1e-9
                || nh > 2.0 * log_e + 1e-9
                || nh > log_e + n as f64 * std::f64::consts::LOG2_E + 1e-9
            {
                entropy_sweep.violations += 1;
            }
            if graph.a_ids.len() <= 8 {
                equivalence.checked += 1;
                let brute = km_partition_bruteforce(&graph).unwrap();
                if (brute.entropy - part.entropy).abs() > 1e-12 {
                    equivalence.violations += 1;
                }
            }
        }
    }
    sweeps.push(entropy_sweep);
    sweeps.push(equivalence);

    // Sorter bounds over a corpus of small posets and all of their linear
    // extensions (deterministically sampled when the count is large).
    let corpus: Vec<Poset> = (1..=max_n)
        .flat_map(|n| posort_core::instances::small_corpus(n, 40, 7_700 + n as u64))
        .collect();
    let chunk = corpus.len().div_ceil(jobs.max(1));
    let outcomes: Vec<[u64; 8]> = std::thread::scope(|scope| {
        let handles: Vec<_> = corpus
            .chunks(chunk)
            .map(|chunk| scope.spawn(move || sorter_sweep_chunk(chunk)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker"))
            .collect()
    });
    let mut totals = [0u64; 8];
    for counts in outcomes {
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    let [runs, wrong, ins_viol, merge_viol, eps_viol, cautious_viol, pre_viol, width2_viol] =
        totals;
    sweeps.push(Sweep {
        name: "sorter correctness",
        checked: runs,
        violations: wrong,
    });
    sweeps.push(Sweep {
        name: "insertion sort bound",
        checked: runs,
        violations: ins_viol,
    });
    sweeps.push(Sweep {
        name: "merge sort (g+1)n and epsilon bounds",
        checked: runs,
        violations: merge_viol + eps_viol,
    });
    sweeps.push(Sweep {
        name: "cautious 15.09 log2 e(P) bound",
        checked: runs,
        violations: cautious_viol,
    });
    sweeps.push(Sweep {
        name: "preprocessed 15.09 log2 e(P) bound",
        checked: runs,
        violations: pre_viol,
    });
    sweeps.push(Sweep {
        name: "width-2 merging 6 log2 e(P) bound",
        checked: runs,
        violations: width2_viol,
    });

    // Core merge bound on random width-2 instances.
    let mut core = Sweep {
        name: "core merge 3nH(x) bound",
        checked: 0,
        violations: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..200u64 {
        let n = 2 + (trial as usize % 59);
        let (p, a, b) = posort_core::instances::random_two_chain_poset(n, 5_000 + trial);
        let order = random_topological_order(&p, &mut rng);
        let mut src = HiddenOrderOracle::new(&order, &p).unwrap();
        let report = mupi(&p, &a, &b, &mut src).unwrap();
        core.checked += 1;
        if report.order != order
            || report.core_comparisons as f64 > 3.0 * report.n as f64 * report.core_entropy + 1e-9
        {
            core.violations += 1;
        }
    }
    sweeps.push(core);

    // Hwang-Lin merge bound fuzz.
    let mut hl = Sweep {
        name: "hwang-lin |Y| log2(4|X|/|Y|) bound",
        checked: 0,
        violations: 0,
    };
    use rand::seq::SliceRandom;
    use rand::Rng;
    for _ in 0..5_000 {
        let x_len = rng.gen_range(1..=32usize);
        let y_len = rng.gen_range(1..=x_len);
        let total = x_len + y_len;
        let mut order: Vec<usize> = (0..total).collect();
        order.shuffle(&mut rng);
        let pos = |v: usize, o: &[usize]| o.iter().position(|&w| w == v).unwrap();
        let mut x: Vec<usize> = (0..x_len).collect();
        x.sort_by_key(|&v| pos(v, &order));
        let mut y: Vec<usize> = (x_len..total).collect();
        y.sort_by_key(|&v| pos(v, &order));
        let mut src = HiddenOrderOracle::new(&order, &Poset::antichain(total)).unwrap();
        let r = hwang_lin_merge(&Chain::new(x), &Chain::new(y), &mut src);
        hl.checked += 1;
        if r.merged.elems != order || r.comparisons as f64 > hwang_lin_bound(x_len, y_len) + 1e-9 {
            hl.violations += 1;
        }
    }
    sweeps.push(hl);

    let all_ok = sweeps
        .iter()
        .map(Sweep::report)
        .fold(true, |acc, ok| acc && ok);
    println!(
        "verify: max_n = {max_n}, {} sweeps in {:.1}s -> {}",
        sweeps.len(),
        start.elapsed().as_secs_f64(),
        if all_ok {
            "all checks passed"
        } else {
            "VIOLATIONS FOUND"
        }
    );
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// Runs all four sorters over every (poset, extension) pair of the chunk and
/// counts violations: [runs, wrong orders, insertion, merge, merge-eps,
/// cautious, preprocessed, width2-mupi] violations.
fn sorter_sweep_chunk(chunk: &[Poset]) -> [u64; 8] {
    const EXTENSION_CAP: usize = 720;
    let mut counts = [0u64; 8];
    for p in chunk {
        let e = count_linear_extensions(p).unwrap();
        let log_e = log2_extensions(p).unwrap();
        let exts = if e.to_usize().is_some_and(|e| e <= EXTENSION_CAP) {
            linear_extensions(p)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(p.len() as u64);
            (0..EXTENSION_CAP)
                .map(|_| sample_linear_extension(p, &mut rng).unwrap())
                .collect()
        };
        let pre = posort_core::sort::preprocess(p);
        for order in &exts {
            counts[0] += 1;
            let mut src = HiddenOrderOracle::new(order, p).unwrap();
            let r = posort_core::sort::insertion_sort_supi(p, &mut src);
            if &r.order != order {
                counts[1] += 1;
            }
            if r.comparisons as f64 > r.bound_value + 1e-9 {
                counts[2] += 1;
            }

            let mut src = HiddenOrderOracle::new(order, p).unwrap();
            let r = posort_core::sort::merge_sort_supi(p, &mut src);
            if &r.order != order {
                counts[1] += 1;
            }
            if r.comparisons as f64 > r.bound_value + 1e-9 {
                counts[3] += 1;
            }
            for eps in [0.35, 1.0] {
                if r.comparisons as f64 > merge_sort_eps_bound(log_e, p.len(), eps) + 1e-9 {
                    counts[4] += 1;
                }
            }

            let mut src = HiddenOrderOracle::new(order, p).unwrap();
            let r = posort_core::sort::cautious_merge_sort(p, &mut src);
            if &r.order != order {
                counts[1] += 1;
            }
            if r.comparisons as f64 > CAUTIOUS_FACTOR * log_e + 1e-9 {
                counts[5] += 1;
            }

            let mut src = HiddenOrderOracle::new(order, p).unwrap();
            let r = posort_core::sort::preprocessed_sort_with(&pre, p, &mut src);
            if &r.order != order {
                counts[1] += 1;
            }
            if r.comparisons as f64 > CAUTIOUS_FACTOR * log_e + 1e-9 {
                counts[6] += 1;
            }
        }
        // Width-2 instances additionally exercise the 6 log2 e(P) bound of
        // the merging engine.
        let decomposition = greedy_chain_decomposition(p);
        if decomposition.chains.len() == 2 {
            let a = decomposition.chains[0].clone();
            let b = decomposition.chains[1].clone();
            for order in exts.iter().take(64) {
                let mut src = HiddenOrderOracle::new(order, p).unwrap();
                let report = mupi(p, &a, &b, &mut src).unwrap();
                if &report.order != order || report.comparisons as f64 > 6.0 * log_e + 1e-9 {
                    counts[7] += 1;
                }
            }
        }
    }
    counts
}
