use serde::{Deserialize, Serialize};

use super::{move_tracked, run_chunks_from, MCEstimate, CHUNK_TRIALS};
use crate::error::{Error, Result};
use crate::exact::KTupleIndexer;
use crate::rule::ShuffleRule;

/// Largest frequency table the plug-in estimator will allocate.
pub const DEFAULT_TABLE_CAP: usize = 10_000_000;

/// Chunks simulated between tally passes, bounding the index buffer.
const CHUNKS_PER_BATCH: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginTv {
    pub estimate: MCEstimate,
    pub state_count: usize,
    /// Order of the upward bias of the plug-in estimator, `sqrt(N / (2 pi M))`.
    pub bias_order: f64,
    /// Fewer than 100 samples per state.
    pub undersampled: bool,
}

/// Plug-in TV between the empirical law of the tracked cards' positions at
/// time `t` and the uniform k-tuple marginal.
///
/// The standard error is the delta-method one for `(1/2) sum |f_s - 1/N|`.
pub fn mc_tv_plugin(
    rule: &ShuffleRule,
    start: &[usize],
    t: u64,
    samples: u64,
    seed: u64,
    table_cap: usize,
) -> Result<PluginTv> {
    if samples == 0 {
        return Err(Error::param("samples must be at least 1"));
    }
    let n = rule.n();
    let k = start.len();
    let indexer = KTupleIndexer::new(n, k)?;
    indexer.validate(start)?;
    if indexer.count() > table_cap {
        return Err(Error::TableTooLarge {
            states: indexer.count(),
            budget: table_cap,
        });
    }
    let big_n = indexer.count();
    let mut counts = vec![0u64; big_n];
    let batch = CHUNKS_PER_BATCH * CHUNK_TRIALS;
    let mut done = 0u64;
    while done < samples {
        let m = batch.min(samples - done);
        // Streams are numbered globally so batching does not change the draws.
        let first_chunk = done / CHUNK_TRIALS;
        let encoded = run_chunks_from(first_chunk, m, seed, |rng, trials| {
            let mut out = Vec::with_capacity(trials as usize);
            let mut pos = start.to_vec();
            let mut zero = vec![0; k];
            for _ in 0..trials {
                pos.copy_from_slice(start);
                for s in 1..=t {
                    let l = rule.sample_left(s, rng);
                    let r = rng.position(n);
                    move_tracked(&mut pos, l, r);
                }
                for (z, p) in zero.iter_mut().zip(&pos) {
                    *z = p - 1;
                }
                out.push(indexer.encode0(&zero));
            }
            out
        });
        for chunk in encoded {
            for i in chunk {
                counts[i] += 1;
            }
        }
        done += m;
    }

    Ok(PluginTv {
        estimate: plugin_tv(&counts, seed),
        state_count: big_n,
        bias_order: (big_n as f64 / (2.0 * std::f64::consts::PI * samples as f64)).sqrt(),
        undersampled: samples < 100 * big_n as u64,
    })
}

/// Plug-in TV to the uniform law from a frequency table over all states.
pub fn plugin_tv(counts: &[u64], seed: u64) -> MCEstimate {
    let samples: u64 = counts.iter().sum();
    let mf = samples as f64;
    let u = 1.0 / counts.len() as f64;
    let mut tv = 0.0;
    let mut fg = 0.0;
    let mut fg2 = 0.0;
    for &c in counts {
        let f = c as f64 / mf;
        tv += (f - u).abs();
        let g = if f > u {
            0.5
        } else if f < u {
            -0.5
        } else {
            0.0
        };
        fg += f * g;
        fg2 += f * g * g;
    }
    let var = ((fg2 - fg * fg) / mf).max(0.0);
    MCEstimate {
        value: 0.5 * tv,
        std_error: var.sqrt(),
        samples,
        seed,
    }
}
