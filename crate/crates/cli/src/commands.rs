use std::fmt::Write as _;

use serde_json::{json, Value};
use shuffle_mix::cyclic::{
    cyclic_mixing_upper, cyclic_one_card_bound, default_cyclic_fit, eig_scan, eig_scan_csv, optimize_epsilon,
    p_recursion, tau_hat_moments, CyclicBoundParams,
};
use shuffle_mix::exact::{
    cutoff_profile, exact_tv_curve, partial_mixing_time, worst_case_curve, ExactOptions, Start, StartStrategy,
    DEFAULT_STATE_CAP,
};
use shuffle_mix::mc::{
    couple_k_decks, couple_one_card, couple_two_hands_random, left_hand_hit_count, mc_tv_plugin,
    tv_lower_bound_fixed_cards, CouplingRun, KDeckCouplingParams, OneCardStart, Selection, DEFAULT_TABLE_CAP,
};
use shuffle_mix::{RuleKind, ShuffleRule};

use crate::args::*;
use crate::error::{param, CliError};

/// Data produced by one command: an optional CSV table and a JSON record.
pub struct Output {
    pub csv: Option<String>,
    pub json: Value,
    /// Whether `--format auto` picks the CSV.
    pub prefer_csv: bool,
}

impl Output {
    fn table(csv: String, json: Value) -> Self {
        Self {
            csv: Some(csv),
            json,
            prefer_csv: true,
        }
    }

    fn record(json: Value) -> Self {
        Self {
            csv: None,
            json,
            prefer_csv: false,
        }
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        let csv = match format {
            Format::Csv => true,
            Format::Json => false,
            Format::Auto => self.prefer_csv,
        };
        match (csv, &self.csv) {
            (true, Some(text)) => Ok(text.clone()),
            (true, None) => Err(CliError::Usage("this command has no CSV output; use --format json".into())),
            (false, _) => Ok(serde_json::to_string_pretty(&self.json)? + "\n"),
        }
    }
}

fn rule(kind: RuleArg, n: usize) -> Result<ShuffleRule, CliError> {
    let kind = match kind {
        RuleArg::Top => RuleKind::TopToRandom,
        RuleArg::Random => RuleKind::RandomToRandom,
        RuleArg::Cyclic => RuleKind::CyclicToRandom,
    };
    Ok(ShuffleRule::from_kind(kind, n)?)
}

fn check_deck(n: usize, k: usize) -> Result<(), CliError> {
    if n < 2 {
        return Err(param(format!("n must be at least 2 (got {n})")));
    }
    if k == 0 {
        return Err(param("k must be at least 1"));
    }
    if k > n {
        return Err(param(format!("k exceeds n ({k} > {n})")));
    }
    Ok(())
}

fn deck(d: &DeckArgs) -> Result<ShuffleRule, CliError> {
    check_deck(d.n, d.k)?;
    rule(d.rule, d.n)
}

fn start_positions(start: &Option<Vec<usize>>, k: usize) -> Result<Vec<usize>, CliError> {
    match start {
        Some(s) if s.len() != k => Err(param(format!("--start lists {} positions but k = {k}", s.len()))),
        Some(s) => Ok(s.clone()),
        None => Ok((1..=k).collect()),
    }
}

fn time_grid(t_max: u64) -> Result<Vec<u64>, CliError> {
    if t_max == 0 {
        return Err(param("--t-max must be at least 1"));
    }
    Ok((1..=t_max).collect())
}

fn exact_opts(cap: Option<usize>, seed: u64) -> ExactOptions {
    ExactOptions {
        cap: cap.unwrap_or(DEFAULT_STATE_CAP),
        seed,
        ..ExactOptions::default()
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(v)?)
}

pub fn dispatch(command: &Command, seed: u64) -> Result<Output, CliError> {
    match command {
        Command::ExactTv(a) => {
            let r = deck(&a.deck)?;
            let start = start_positions(&a.start, a.deck.k)?;
            let opts = ExactOptions {
                start_time: a.start_time,
                ..exact_opts(a.cap, seed)
            };
            let curve = exact_tv_curve(&r, &Start::Tuple(start), &time_grid(a.t_max)?, &opts)?;
            Ok(Output::table(curve.to_csv(), to_json(&curve)?))
        }
        Command::WorstTv(a) => {
            let r = deck(&a.deck)?;
            let strategy = if a.exhaustive { StartStrategy::Exhaustive } else { StartStrategy::Auto };
            let curve = worst_case_curve(&r, a.deck.k, &time_grid(a.t_max)?, &strategy, &exact_opts(a.cap, seed))?;
            Ok(Output::table(curve.to_csv(), to_json(&curve)?))
        }
        Command::MixTime(a) => {
            let r = deck(&a.deck)?;
            let opts = ExactOptions {
                horizon: a.horizon,
                ..exact_opts(a.cap, seed)
            };
            let m = partial_mixing_time(&r, a.deck.k, a.eps, &StartStrategy::Auto, &opts)?;
            Ok(Output::record(to_json(&m)?))
        }
        Command::Cutoff(a) => {
            let r = deck(&a.deck)?;
            let rows = cutoff_profile(&r, a.deck.k, &a.alphas, &StartStrategy::Auto, &exact_opts(a.cap, seed))?;
            let mut csv = String::from("alpha,t,tv,bound\n");
            for row in &rows {
                let _ = writeln!(csv, "{},{},{},{}", row.alpha, row.t, row.tv, row.bound);
            }
            Ok(Output::table(csv, to_json(&rows)?))
        }
        Command::McTv(a) => {
            let r = deck(&a.deck)?;
            let start = start_positions(&a.start, a.deck.k)?;
            let est = mc_tv_plugin(&r, &start, a.t, a.samples, seed, a.table_cap.unwrap_or(DEFAULT_TABLE_CAP))?;
            Ok(Output::record(to_json(&est)?))
        }
        Command::LowerBound(a) => {
            let r = deck(&a.deck)?;
            let start = start_positions(&a.start, a.deck.k)?;
            let selection = Selection::for_rule(r.kind());
            let rep = tv_lower_bound_fixed_cards(&r, &start, a.t, a.threshold, selection, a.samples, seed)?;
            Ok(Output::record(to_json(&rep)?))
        }
        Command::Couple(c) => couple(c, seed),
        Command::Hits(a) => {
            let r = deck(&a.deck)?;
            let start = start_positions(&a.start, a.deck.k)?;
            let curve = left_hand_hit_count(&r, &start, &a.times, a.trials, seed)?;
            let ratios = curve.ratios(a.deck.n, a.deck.k);
            let mut csv = String::from("t,hits,std_error,ratio\n");
            for ((t, e), q) in curve.times.iter().zip(&curve.estimates).zip(&ratios) {
                let _ = writeln!(csv, "{t},{},{},{q}", e.value, e.std_error);
            }
            Ok(Output::table(csv, to_json(&curve)?))
        }
        Command::TauHat(a) => Ok(Output::record(to_json(&tau_hat_moments(a.n)?)?)),
        Command::P0(a) => {
            let r = p_recursion(a.eps, a.n)?;
            let mut csv = String::from("s,p,closed_form\n");
            for (s, p) in r.p.iter().enumerate() {
                let _ = writeln!(csv, "{s},{p},{}", r.closed_form(s));
            }
            let json = json!({
                "epsilon": r.epsilon,
                "n": r.n,
                "m": r.m,
                "p0": r.p[0],
                "p0_closed": r.p0_closed,
                "p0_gap": r.p0_gap,
                "terminal": r.p[r.p.len() - 1],
            });
            Ok(Output {
                csv: Some(csv),
                json,
                prefer_csv: false,
            })
        }
        Command::EigScan(a) => {
            let rows = eig_scan(a.xi, a.points)?;
            let json = json!({ "xi": a.xi, "rows": rows });
            Ok(Output::table(eig_scan_csv(&rows), json))
        }
        Command::EigOpt(a) => Ok(Output::record(to_json(&optimize_epsilon(a.xi)?)?)),
        Command::CyclicBound(a) => {
            if a.n < 2 {
                return Err(param(format!("n must be at least 2 (got {})", a.n)));
            }
            let params = bound_params(&a.constant)?;
            let t_max = a.t_max.unwrap_or(10 * a.n as u64);
            let mut csv = String::from("t,bound\n");
            for t in 0..=t_max {
                let _ = writeln!(csv, "{t},{}", cyclic_one_card_bound(t, a.n, &params));
            }
            let json = json!({ "n": a.n, "t_max": t_max, "params": params });
            Ok(Output::table(csv, json))
        }
        Command::CyclicMix(a) => {
            let params = bound_params(&a.constant)?;
            let report = cyclic_mixing_upper(a.n, a.k, &params)?;
            Ok(Output::record(json!({ "params": params, "report": report })))
        }
        Command::Rerun(_) => Err(CliError::Usage("rerun cannot be nested".into())),
    }
}

fn bound_params(c: &BoundConstant) -> Result<CyclicBoundParams, CliError> {
    Ok(match c.c {
        Some(c) => CyclicBoundParams::new(c, "given on the command line")?,
        None => default_cyclic_fit()?.params,
    })
}

fn coupling_times(common: &CouplingCommon) -> (u64, Vec<u64>) {
    let n = common.n as u64;
    let horizon = common.horizon.unwrap_or(20 * n);
    let times = common.times.clone().unwrap_or_else(|| vec![n, 2 * n, 3 * n]);
    (horizon, times)
}

fn coupling_summary(run: &CouplingRun, times: &[u64]) -> Value {
    let survival: Vec<Value> = times
        .iter()
        .map(|&t| json!({ "t": t, "survival": run.survival(t), "unmatched": run.unmatched_fraction(t) }))
        .collect();
    let tallies: Vec<Value> = run
        .tallies
        .iter()
        .map(|h| json!({ "name": h.name, "chi_square": h.chi_square() }))
        .collect();
    json!({
        "n": run.n,
        "trials": run.trials,
        "horizon": run.horizon,
        "seed": run.seed,
        "censored": run.censored(),
        "mean_time": run.mean_time(),
        "mean_match_time": run.mean_match_time(),
        "survival": survival,
        "tallies": tallies,
    })
}

fn couple(c: &CoupleCommand, seed: u64) -> Result<Output, CliError> {
    match c {
        CoupleCommand::OneCard(a) => {
            let r = rule(a.rule, a.common.n)?;
            let (horizon, times) = coupling_times(&a.common);
            let start = OneCardStart { sigma: a.sigma, pi: a.pi };
            let run = couple_one_card(&r, start, horizon, a.common.trials, seed)?;
            Ok(Output::table(run.survival_csv(&times), coupling_summary(&run, &times)))
        }
        CoupleCommand::TwoHand(a) => {
            let (horizon, times) = coupling_times(&a.common);
            let start = OneCardStart { sigma: a.sigma, pi: a.pi };
            let run = couple_two_hands_random(a.common.n, start, horizon, a.common.trials, seed)?;
            Ok(Output::table(run.survival_csv(&times), coupling_summary(&run, &times)))
        }
        CoupleCommand::KDeck(a) => {
            let n = a.common.n;
            check_deck(n, a.k)?;
            let r = rule(a.rule, n)?;
            let (horizon, times) = coupling_times(&a.common);
            let params = KDeckCouplingParams::new(n, a.k, horizon)?;
            let specials = a.specials.clone().unwrap_or_else(|| (1..=a.k).collect());
            let probe = a.probe.unwrap_or(a.k + 1);
            let run = couple_k_decks(&r, &params, &specials, probe, a.common.trials, seed, a.diagnostic)?;
            let mut csv = String::from("t,survivors,trials\n");
            for &t in &times {
                let survivors = run.aux_select_times.iter().filter(|x| x.is_none_or(|v| v > t)).count();
                let _ = writeln!(csv, "{t},{survivors},{}", run.trials);
            }
            let failure: Vec<Value> = times
                .iter()
                .map(|&t| json!({ "t": t, "failure": run.failure_probability(t), "aux_survival": run.aux_survival(t) }))
                .collect();
            let json = json!({
                "params": params,
                "trials": run.trials,
                "seed": run.seed,
                "diagnostic": run.diagnostic,
                "failure": failure,
                "bound_fit": run.bound_fit(&times),
                "first_cause": run.first_cause,
                "occurrences": run.occurrences,
                "triggers": run.triggers,
                "unexplained": run.unexplained,
                "probe_rate": run.probe_rate(),
                "main_right": run.main_right.chi_square(),
                "aux_right": run.aux_right.chi_square(),
            });
            Ok(Output::table(csv, json))
        }
    }
}
