//! Exhaustive per-cell sweep over all activity patterns.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::extraction::{ambiguity_decisions, extract_cell_decided, CellExtraction, CYCLE_LENGTHS};
use crate::field::{CellPattern, ExtractionConfig, Mode};
use crate::tessellation::is_fillable;
use crate::topology::{CellGeometry, FaceId, SITE_COUNT};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepFailure {
    pub bits: u16,
    pub mode: Mode,
    pub connect: u32,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepReport {
    /// Cell evaluations, counting every random MIXED sample.
    pub evaluations: u64,
    /// Distinct `(pattern, decisions)` pairs actually extracted.
    pub extractions: u64,
    pub cycle_lengths: BTreeMap<usize, u64>,
    pub sections_per_cell: BTreeMap<usize, u64>,
    pub failures: Vec<SweepFailure>,
}

impl SweepReport {
    fn merge(mut self, other: SweepReport) -> SweepReport {
        self.evaluations += other.evaluations;
        self.extractions += other.extractions;
        for (k, v) in other.cycle_lengths {
            *self.cycle_lengths.entry(k).or_default() += v;
        }
        for (k, v) in other.sections_per_cell {
            *self.sections_per_cell.entry(k).or_default() += v;
        }
        self.failures.extend(other.failures);
        self
    }

    fn record(&mut self, x: &CellExtraction, weight: u64) {
        self.evaluations += weight;
        for c in x.cycles() {
            *self.cycle_lengths.entry(c.len()).or_default() += weight;
        }
        *self.sections_per_cell.entry(x.sections.len()).or_default() += weight;
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Cycle lengths in the admissible set, and every section closed (each
/// directed support pair matched by exactly one reversed pair) and fillable.
pub fn check_extraction(x: &CellExtraction) -> Result<(), String> {
    for s in &x.sections {
        // Bit `b` of `out[a]` records the directed pair `a -> b`.
        let mut out = [0u32; 32];
        for c in &s.cycles {
            if !CYCLE_LENGTHS.contains(&c.len()) {
                return Err(format!("cycle length {}", c.len()));
            }
            for (a, b) in c.directed_pairs() {
                let bit = 1u32 << b.index();
                if out[a.index()] & bit != 0 {
                    return Err(format!("repeated directed pair {a} -> {b}"));
                }
                out[a.index()] |= bit;
            }
        }
        for a in 0..32 {
            let mut rest = out[a];
            while rest != 0 {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if out[b] & (1 << a) == 0 {
                    return Err(format!("pair {a} -> {b} has no reversed partner"));
                }
            }
        }
        if !is_fillable(s) {
            return Err(format!(
                "section with euler characteristic {} cannot be filled",
                s.euler()
            ));
        }
    }
    Ok(())
}

fn evaluate(bits: u16, mode: Mode, connect: u32, weight: u64, report: &mut SweepReport) {
    report.extractions += 1;
    let pattern = CellPattern::from_bits(bits);
    let outcome = extract_cell_decided(&pattern, connect, [0; 4])
        .map_err(|e| e.to_string())
        .and_then(|x| check_extraction(&x).map(|_| x));
    match outcome {
        Ok(x) => report.record(&x, weight),
        Err(message) => {
            report.evaluations += weight;
            report.failures.push(SweepFailure {
                bits,
                mode,
                connect,
                message,
            });
        }
    }
}

/// Ambiguous faces of a pattern with their corner sites.
fn ambiguous_faces(pattern: &CellPattern) -> Vec<(usize, [usize; 4])> {
    let geom = CellGeometry::canonical();
    let (ambiguous, _) = ambiguity_decisions(pattern, &ExtractionConfig::new(0.5));
    FaceId::all()
        .filter(|f| ambiguous & (1 << f.slot()) != 0)
        .map(|f| (f.slot(), geom.face_corners(f).map(|s| s.index())))
        .collect()
}

/// Maps a random word into the open unit interval.
fn unit(x: u32) -> f64 {
    (f64::from(x) + 0.5) / 4_294_967_296.0
}

/// Draws values consistent with `bits` around the isovalue for the sites in
/// `used` and returns the MIXED decision mask.
fn mixed_mask(
    bits: u16,
    used: u16,
    faces: &[(usize, [usize; 4])],
    config: &ExtractionConfig,
    rng: &mut ChaCha8Rng,
) -> u32 {
    let mut values = [0.0f64; SITE_COUNT];
    for (s, v) in values.iter_mut().enumerate() {
        if used & (1 << s) == 0 {
            continue;
        }
        let u = unit(rng.next_u32());
        *v = if bits & (1 << s) != 0 {
            config.isovalue + u
        } else {
            config.isovalue - 1.0 + u
        };
    }
    faces.iter().fold(0, |mask, (slot, corners)| {
        let mean = corners.iter().map(|&c| values[c]).sum::<f64>() / 4.0;
        if config.is_active(mean) {
            mask | (1 << slot)
        } else {
            mask
        }
    })
}

/// All 2^16 patterns under CONNECT and DISCONNECT, plus `samples` random
/// value assignments per ambiguous pattern under MIXED. Identical decision
/// masks within a pattern are extracted once and weighted.
pub fn sweep(samples: usize, seed: u64) -> SweepReport {
    let config = ExtractionConfig::new(0.0).with_mode(Mode::Mixed);
    (0..=u16::MAX)
        .into_par_iter()
        .fold(SweepReport::default, |mut state, bits| {
            evaluate(bits, Mode::Connect, u32::MAX, 1, &mut state);
            evaluate(bits, Mode::Disconnect, 0, 1, &mut state);
            let faces = ambiguous_faces(&CellPattern::from_bits(bits));
            if faces.is_empty() || samples == 0 {
                return state;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u64::from(bits));
            let used = faces
                .iter()
                .flat_map(|(_, c)| c)
                .fold(0u16, |m, &c| m | (1 << c));
            let mut masks: Vec<u32> = (0..samples)
                .map(|_| mixed_mask(bits, used, &faces, &config, &mut rng))
                .collect();
            masks.sort_unstable();
            for run in masks.chunk_by(|a, b| a == b) {
                evaluate(bits, Mode::Mixed, run[0], run.len() as u64, &mut state);
            }
            state
        })
        .reduce(SweepReport::default, SweepReport::merge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::extract_cell;

    #[test]
    fn mixed_mask_matches_decisions() {
        let config = ExtractionConfig::new(0.0).with_mode(Mode::Mixed);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for bits in [0b1001_0000_0000_1000u16, 0x5a5a, 0x0f0f, 0x6996] {
            let faces = ambiguous_faces(&CellPattern::from_bits(bits));
            for _ in 0..50 {
                let mut probe = rng.clone();
                let mask = mixed_mask(bits, 0xffff, &faces, &config, &mut rng);
                let mut values = [0.0; SITE_COUNT];
                for (s, v) in values.iter_mut().enumerate() {
                    let u = unit(probe.next_u32());
                    *v = if bits & (1 << s) != 0 { u } else { -1.0 + u };
                }
                let pattern = CellPattern::from_values(values, &config);
                assert_eq!(pattern.bits, bits);
                assert_eq!(ambiguity_decisions(&pattern, &config).1, mask);
            }
        }
    }

    #[test]
    fn check_accepts_known_cells() {
        for sites in [&[7u8][..], &[7, 15], &[4, 15], &[0, 1, 2, 3, 4, 5, 6, 7]] {
            for mode in [Mode::Connect, Mode::Disconnect] {
                let p = CellPattern::from_sites(sites);
                let x =
                    extract_cell(&p, &ExtractionConfig::new(0.5).with_mode(mode), [0; 4]).unwrap();
                assert_eq!(check_extraction(&x), Ok(()));
            }
        }
    }
}
