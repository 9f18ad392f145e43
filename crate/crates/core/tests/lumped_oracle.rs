//! Checks the k-tuple chain against the pushforward of the full deck chain
//! on S_n, computed by enumerating every (left, right) pair.

use std::collections::HashMap;

use shuffle_mix::exact::{KTupleDistribution, KTupleIndexer, LumpedEvolver};
use shuffle_mix::ShuffleRule;

type Deck = Vec<u8>;

fn deck_step(dist: &HashMap<Deck, f64>, rule: &ShuffleRule, t: u64) -> HashMap<Deck, f64> {
    let n = rule.n();
    let w = rule.left_hand(t).weights(n);
    let mut out = HashMap::with_capacity(dist.len());
    for (deck, &mass) in dist {
        for (l, &wl) in w.iter().enumerate() {
            if wl == 0.0 {
                continue;
            }
            for r in 0..n {
                let mut next = deck.clone();
                next.swap(l, r);
                *out.entry(next).or_insert(0.0) += mass * wl / n as f64;
            }
        }
    }
    out
}

/// Law of the positions (1-based) of cards 1..=k.
fn project(dist: &HashMap<Deck, f64>, ix: &KTupleIndexer) -> Vec<f64> {
    let mut probs = vec![0.0; ix.count()];
    for (deck, &mass) in dist {
        let tuple: Vec<usize> = (1..=ix.k())
            .map(|c| deck.iter().position(|&x| x as usize == c).unwrap() + 1)
            .collect();
        probs[ix.encode(&tuple).unwrap()] += mass;
    }
    probs
}

fn rules(n: usize) -> Vec<ShuffleRule> {
    let skewed: Vec<Vec<f64>> = (0..3)
        .map(|s| {
            let raw: Vec<f64> = (0..n).map(|i| ((i + s) % n + 1) as f64).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        })
        .collect();
    vec![
        ShuffleRule::top_to_random(n).unwrap(),
        ShuffleRule::random_to_random(n).unwrap(),
        ShuffleRule::cyclic_to_random(n).unwrap(),
        ShuffleRule::custom(n, skewed).unwrap(),
    ]
}

fn start_deck(n: usize) -> Deck {
    // A fixed non-identity arrangement so that no tracked card starts on top.
    let mut d: Deck = (1..=n as u8).collect();
    d.rotate_left(1);
    d
}

#[test]
fn lumped_chain_matches_deck_pushforward() {
    for n in 2..=6 {
        for rule in rules(n) {
            let mut deck_dist = HashMap::from([(start_deck(n), 1.0)]);
            let mut evolvers: Vec<(KTupleIndexer, LumpedEvolver)> = (1..=n)
                .map(|k| {
                    let ix = KTupleIndexer::new(n, k).unwrap();
                    let start = KTupleDistribution::from_probs(ix.clone(), project(&deck_dist, &ix)).unwrap();
                    (ix, LumpedEvolver::new(rule.clone(), start, 1).unwrap())
                })
                .collect();
            for t in 1..=10 {
                deck_dist = deck_step(&deck_dist, &rule, t);
                for (ix, ev) in evolvers.iter_mut() {
                    ev.advance().unwrap();
                    let brute = project(&deck_dist, ix);
                    for (a, b) in ev.probs().iter().zip(&brute) {
                        assert!(
                            (a - b).abs() < 1e-10,
                            "{:?} n={n} k={} t={t}: {a} vs {b}",
                            rule.kind(),
                            ix.k()
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn one_step_random_to_random_pairs() {
    // n = 4, k = 2, start (1, 2): enumerate the 16 (L, R) pairs by hand.
    let n = 4;
    let rule = ShuffleRule::random_to_random(n).unwrap();
    let ix = KTupleIndexer::new(n, 2).unwrap();
    let mut ev = LumpedEvolver::new(rule, KTupleDistribution::point_mass(ix.clone(), &[1, 2]).unwrap(), 1).unwrap();
    ev.advance().unwrap();
    let mut expect = vec![0.0; ix.count()];
    for l in 1..=n {
        for r in 1..=n {
            let mv = |p: usize| if p == l { r } else if p == r { l } else { p };
            expect[ix.encode(&[mv(1), mv(2)]).unwrap()] += 1.0 / 16.0;
        }
    }
    for (a, b) in ev.probs().iter().zip(&expect) {
        assert!((a - b).abs() < 1e-15);
    }
    // Staying put: any L == R (4 ways) or a swap avoiding both cards (2 ways).
    assert!((ev.probs()[ix.encode(&[1, 2]).unwrap()] - 6.0 / 16.0).abs() < 1e-15);
}

#[test]
fn phase_shifted_start_matches_deck_chain() {
    let n = 5;
    let rule = ShuffleRule::cyclic_to_random(n).unwrap();
    let ix = KTupleIndexer::new(n, 2).unwrap();
    let mut deck_dist = HashMap::from([(start_deck(n), 1.0)]);
    let start = KTupleDistribution::from_probs(ix.clone(), project(&deck_dist, &ix)).unwrap();
    let mut ev = LumpedEvolver::new(rule.clone(), start, 4).unwrap();
    for t in 4..=12 {
        deck_dist = deck_step(&deck_dist, &rule, t);
        ev.advance().unwrap();
        let brute = project(&deck_dist, &ix);
        for (a, b) in ev.probs().iter().zip(&brute) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
