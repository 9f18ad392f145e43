use shuffle_mix::exact::{exact_tv_curve, single_card_matrix, ExactOptions, KTupleIndexer, Start};
use shuffle_mix::mc::{
    couple_k_decks, couple_one_card, couple_two_hands_random, left_hand_hit_count, mc_tv_plugin, plugin_tv,
    tv_lower_bound_fixed_cards, KDeckCouplingParams, OneCardStart, Selection, Situation, DEFAULT_TABLE_CAP,
};
use shuffle_mix::stats::chi_square;
use shuffle_mix::{RandomStream, ShuffleRule};

#[test]
fn plugin_on_uniform_samples_is_small() {
    let ix = KTupleIndexer::new(10, 2).unwrap();
    let mut counts = vec![0u64; ix.count()];
    let mut rng = RandomStream::new(5, 0);
    for _ in 0..1_000_000 {
        counts[rng.below(ix.count())] += 1;
    }
    let est = plugin_tv(&counts, 5);
    let bias = (90.0 / (2.0 * std::f64::consts::PI * 1e6)).sqrt();
    assert!(est.value < 0.02);
    assert!(est.value < 2.0 * bias, "{} vs bias order {bias}", est.value);
}

#[test]
fn plugin_matches_exact_top_to_random() {
    let rule = ShuffleRule::top_to_random(10).unwrap();
    let exact = exact_tv_curve(&rule, &Start::Tuple(vec![4]), &[5], &ExactOptions::default()).unwrap();
    let est = mc_tv_plugin(&rule, &[4], 5, 1_000_000, 17, DEFAULT_TABLE_CAP).unwrap();
    let diff = (est.estimate.value - exact.values[0]).abs();
    assert!(diff <= 3.0 * est.estimate.std_error + est.bias_order, "diff={diff} {est:?}");
}

#[test]
fn never_selected_count_top_to_random() {
    let (n, k, t) = (100, 10, 200);
    let rule = ShuffleRule::top_to_random(n).unwrap();
    let start: Vec<usize> = (2..=k + 1).collect();
    let rep = tv_lower_bound_fixed_cards(&rule, &start, t, 2, Selection::RightHand, 100_000, 31).unwrap();
    let mean = k as f64 * (1.0 - 1.0 / n as f64).powi(t as i32);
    assert!((rep.x_mean_exact.unwrap() - mean).abs() < 1e-12);
    assert!(rep.x_mean.within(mean, 3.0), "{:?} vs {mean}", rep.x_mean);
    assert!(rep.x_variance < mean + 3.0 * rep.x_variance_se);
    // More than 2 cards fixed is far likelier than for a uniform deck.
    assert!(rep.lower_bound.value > 0.1);
}

#[test]
fn one_card_coupling_time_is_geometric() {
    let n = 50;
    let rule = ShuffleRule::cyclic_to_random(n).unwrap();
    let run = couple_one_card(&rule, OneCardStart { sigma: 1, pi: None }, 20 * n as u64, 100_000, 3).unwrap();
    assert_eq!(run.censored(), 0);
    assert!(run.mean_time().within(n as f64, 3.0), "{:?}", run.mean_time());
    for t in [n as u64, 2 * n as u64] {
        let exact = (1.0 - 1.0 / n as f64).powi(t as i32);
        assert!(run.survival(t).within(exact, 3.0), "t={t} {:?} vs {exact}", run.survival(t));
        // The positions agree no later than the selection time.
        assert!(run.unmatched(t) <= run.survivors(t));
    }
    for tally in &run.tallies {
        assert!(tally.chi_square().p_value > 0.001, "{}: {:?}", tally.name, tally.chi_square());
    }
}

#[test]
fn one_card_coupling_preserves_deck_marginals() {
    // After a few steps the card's position in the arbitrarily started deck
    // must follow the exact one-card law.
    let n = 10;
    let horizon = 6;
    let rule = ShuffleRule::top_to_random(n).unwrap();
    let run = couple_one_card(&rule, OneCardStart { sigma: 3, pi: None }, horizon, 200_000, 8).unwrap();
    let mut law = vec![0.0; n];
    law[2] = 1.0;
    for t in 1..=horizon {
        let m = single_card_matrix(&rule, t);
        law = (0..n).map(|q| (0..n).map(|p| law[p] * m[(p, q)]).sum()).collect();
    }
    let test = chi_square(&run.final_positions[0].counts, &law);
    assert!(test.p_value > 0.001, "{test:?}");
    // The uniformly started deck stays uniform.
    assert!(run.final_positions[1].chi_square().p_value > 0.001);
}

#[test]
fn two_hand_coupling_beats_its_bound_and_one_hand() {
    let n = 50;
    let nf = n as f64;
    let start = OneCardStart { sigma: 7, pi: None };
    let two = couple_two_hands_random(n, start, 20 * n as u64, 100_000, 21).unwrap();
    for t in [25u64, 50, 100] {
        let s = two.survival(t);
        let bound = (-2.0 * t as f64 * (1.0 - 2.0 / nf) / nf).exp();
        assert!(s.value <= bound + 3.0 * s.std_error, "t={t} {s:?} bound={bound}");
    }
    for tally in &two.tallies {
        assert!(tally.chi_square().p_value > 0.001, "{}", tally.name);
    }
    let rule = ShuffleRule::random_to_random(n).unwrap();
    let one = couple_one_card(&rule, start, 20 * n as u64, 100_000, 21).unwrap();
    assert!(two.mean_time().value < one.mean_match_time().value);
}

#[test]
fn k_deck_probe_rate_and_main_hand_uniform() {
    let (n, k) = (30, 3);
    let rule = ShuffleRule::cyclic_to_random(n).unwrap();
    let params = KDeckCouplingParams::new(n, k, 20 * n as u64).unwrap();
    let run = couple_k_decks(&rule, &params, &[1, 2, 3], 4, 100_000, 2, false).unwrap();
    let rate = run.probe_rate();
    assert!(rate.within(1.0 / n as f64, 3.0), "{rate:?}");
    assert!(run.main_right.chi_square().p_value > 0.001);
    assert!(run.aux_right.chi_square().p_value > 0.001);
    assert_eq!(run.unexplained, 0);
}

#[test]
fn k_deck_multi_hit_count_below_bound() {
    let (n, k, t) = (50, 3, 500);
    let rule = ShuffleRule::random_to_random(n).unwrap();
    let params = KDeckCouplingParams::new(n, k, t).unwrap();
    let run = couple_k_decks(&rule, &params, &[5, 15, 25], 30, 20_000, 9, true).unwrap();
    let e4 = run.trigger_mean(Situation::HeadsNonSpecial);
    let bound = t as f64 * params.multi_hit_probability();
    assert!(e4.value <= bound + 3.0 * e4.std_error, "{e4:?} bound={bound}");
    assert!(e4.value > 0.0);
}

#[test]
fn cyclic_hit_ratio_levels_off() {
    let n = 100;
    let rule = ShuffleRule::cyclic_to_random(n).unwrap();
    let times = [1000u64, 2500, 5000, 10_000];
    let curve = left_hand_hit_count(&rule, &[1], &times, 2000, 4).unwrap();
    let r = curve.ratios(n, 1);
    let change = (r[3] - r[2]).abs() / r[3];
    assert!(change < 0.1, "ratios {r:?}");
    assert!(curve.fit.certifies());
}

#[test]
fn hit_count_scales_with_k() {
    let n = 200;
    let rule = ShuffleRule::cyclic_to_random(n).unwrap();
    let t = [4000u64];
    let one = left_hand_hit_count(&rule, &[1], &t, 4000, 12).unwrap();
    let four = left_hand_hit_count(&rule, &[1, 51, 101, 151], &t, 4000, 13).unwrap();
    let ratio = four.estimates[0].value / one.estimates[0].value;
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn same_seed_same_results() {
    let rule = ShuffleRule::cyclic_to_random(20).unwrap();
    let params = KDeckCouplingParams::new(20, 2, 100).unwrap();
    let a = couple_k_decks(&rule, &params, &[1, 2], 3, 3000, 7, true).unwrap();
    let b = couple_k_decks(&rule, &params, &[1, 2], 3, 3000, 7, true).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| couple_k_decks(&rule, &params, &[1, 2], 3, 3000, 7, true).unwrap());
    assert_eq!(a, c);
}
