//! Command-line driver.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::classify::classify_fragment;
use crate::engine::{export_forest, init_1sea, solve, Answer, OaMode, SolveConfig};
use crate::frontend::{parse_problem, print_problem, render_answer, Problem};
use crate::gen::{GenKind, Generator};
use crate::oracle::{brute_force_solve, Bound};
use crate::reduce::reduce_problem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OaArg {
    Full,
    LengthsOnly,
}

#[derive(Debug, Parser)]
#[command(name = "sea", version, about = "Decide word equations with regular and length constraints")]
pub struct RunConfig {
    /// Problem file.
    pub input: Option<PathBuf>,
    /// Maximum number of unfolding steps.
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    /// Print a model after `sat`.
    #[arg(long)]
    pub model: bool,
    /// Print the fragment of each disjunct before solving.
    #[arg(long)]
    pub fragment: bool,
    /// Write the unfolding tree in Graphviz format.
    #[arg(long, value_name = "PATH")]
    pub dot: Option<PathBuf>,
    /// Length abstraction used to prune nodes.
    #[arg(long, value_enum, default_value_t = OaArg::Full)]
    pub oa: OaArg,
    /// Merge all equations into one before solving.
    #[arg(long)]
    pub reduce_to_single: bool,
    /// Compare the verdict against bounded enumeration.
    #[arg(long, value_name = "BOUND")]
    pub oracle_check: Option<usize>,
    /// Seed for `--generate`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print a random instance instead of solving.
    #[arg(long, value_enum, value_name = "KIND")]
    pub generate: Option<GenKind>,
}

pub const EXIT_SAT: i32 = 0;
pub const EXIT_UNSAT: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

/// Run one invocation, writing the verdict to `out` and diagnostics to
/// `err`. Returns the exit status.
pub fn run(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match run_inner(cfg, out, err) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn run_inner(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    if let Some(kind) = cfg.generate {
        let p = Generator::new(cfg.seed).generate(kind);
        write!(out, "{}", print_problem(&p)).map_err(|e| e.to_string())?;
        return Ok(EXIT_SAT);
    }
    let path = cfg.input.as_ref().ok_or("no input file")?;
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut p: Problem = parse_problem(&text).map_err(|e| format!("{}:{e}", path.display()))?;
    if cfg.reduce_to_single {
        p = reduce_problem(&p).map_err(|e| e.to_string())?;
    }
    let solve_cfg = SolveConfig {
        budget: cfg.budget,
        oa: match cfg.oa {
            OaArg::Full => OaMode::Full,
            OaArg::LengthsOnly => OaMode::LengthsOnly,
        },
        ..Default::default()
    };
    if cfg.fragment {
        let sigma = p.alphabet();
        let ds = p.disjuncts(solve_cfg.max_disjuncts).ok_or("too many disjuncts")?;
        for (k, d) in ds.iter().enumerate() {
            let f = init_1sea(d, &sigma).map_err(|e| e.to_string())?;
            let frag = classify_fragment(&f);
            let prefix = if ds.len() == 1 { "fragment".to_string() } else { format!("fragment[{k}]") };
            match &frag.witness {
                Some(w) => writeln!(out, "{prefix}: {} ({w})", frag.tag),
                None => writeln!(out, "{prefix}: {}", frag.tag),
            }
            .map_err(|e| e.to_string())?;
        }
    }

    let sol = solve(&p, &solve_cfg).map_err(|e| e.to_string())?;
    if let Some(path) = &cfg.dot {
        std::fs::write(path, export_forest(&sol.trees)).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Answer::Unknown(why) = &sol.answer {
        let _ = writeln!(err, "unknown: {why}");
    }
    write!(out, "{}", render_answer(&sol.answer, cfg.model)).map_err(|e| e.to_string())?;

    if let Some(b) = cfg.oracle_check {
        let found = brute_force_solve(&p, Bound::new(b));
        if let (Answer::Unsat, Some(m)) = (&sol.answer, &found) {
            let _ = writeln!(err, "oracle-check: disagreement, bound {b} finds a model: {m:?}");
            return Ok(EXIT_ERROR);
        }
        let _ = writeln!(
            err,
            "oracle-check: agrees (bound {b}: {})",
            if found.is_some() { "model found" } else { "no model" }
        );
    }
    Ok(match sol.answer {
        Answer::Sat(_) => EXIT_SAT,
        Answer::Unsat => EXIT_UNSAT,
        Answer::Unknown(_) => EXIT_UNKNOWN,
    })
}
