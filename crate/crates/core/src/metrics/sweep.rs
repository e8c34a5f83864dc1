//! Test PSNR of toy networks over a grid of activation kinds and widths.

use std::fmt::Write as _;

use crate::activation::ActivationKind;
use crate::error::Result;
use crate::imaging::Dataset;
use crate::metrics::evaluate;
use crate::network::{NetworkSpec, Preset};
use crate::train::{train, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: ActivationKind,
    pub width: usize,
    pub param_count: usize,
    /// Test PSNR per seed, in seed order.
    pub psnr: Vec<f64>,
}

impl SweepRow {
    pub fn median_psnr(&self) -> f64 {
        median(&self.psnr)
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Trains one toy network per (kind, width, seed) with `base`'s budget and
/// scores it on `test`. Cells whose width does not suit the activation are
/// skipped with a warning.
pub fn sweep(
    kinds: &[ActivationKind],
    widths: &[usize],
    seeds: &[u64],
    base: &TrainConfig,
    train_set: &Dataset,
    test_set: &Dataset,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &kind in kinds {
        for &width in widths {
            let preset = Preset::toy(kind, width);
            let spec = match NetworkSpec::for_preset(preset, base.scale) {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("skipping {kind} width {width}: {e}");
                    continue;
                }
            };
            let mut psnr = Vec::with_capacity(seeds.len());
            for &seed in seeds {
                let cfg = TrainConfig {
                    preset,
                    seed,
                    eval_every: 0,
                    ..base.clone()
                };
                let out = train(&cfg, train_set, &[], &mut std::io::sink(), None)?;
                psnr.push(evaluate(out.trainer.network(), test_set, "test")?.mean_psnr());
            }
            rows.push(SweepRow {
                kind,
                width,
                param_count: spec.param_count(),
                psnr,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("kind,width,params,median_psnr,psnr_per_seed\n");
    for r in rows {
        let seeds: Vec<String> = r.psnr.iter().map(|p| format!("{p:.4}")).collect();
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{}",
            r.kind,
            r.width,
            r.param_count,
            r.median_psnr(),
            seeds.join(";")
        );
    }
    out
}

/// Whitespace-separated `params psnr` blocks, one per kind, separated by
/// blank lines (the layout gnuplot's `index` expects).
pub fn sweep_plot_data(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let mut kinds: Vec<ActivationKind> = Vec::new();
    for r in rows {
        if !kinds.contains(&r.kind) {
            kinds.push(r.kind);
        }
    }
    for (i, k) in kinds.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# {k}");
        let mut mine: Vec<&SweepRow> = rows.iter().filter(|r| r.kind == *k).collect();
        mine.sort_by_key(|r| r.param_count);
        for r in mine {
            let _ = writeln!(out, "{} {:.4}", r.param_count, r.median_psnr());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{ColorSpace, Degradation, Image};

    fn data() -> Dataset {
        let img = Image::from_fn(24, 24, ColorSpace::Gray, |_, y, x| {
            0.5 + 0.3 * ((y as f64 * 0.4).sin() + (x as f64 * 0.3).cos()) / 2.0
        })
        .unwrap();
        Dataset::from_images(vec![("a".into(), img)], 2, Degradation::Bicubic).unwrap()
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            scale: 2,
            iterations: 2,
            crop_hr: 12,
            ..TrainConfig::toy(ActivationKind::Relu, 4)
        }
    }

    #[test]
    fn empty_width_list() {
        let d = data();
        assert!(sweep(&[ActivationKind::Relu], &[], &[0], &cfg(), &d, &d).unwrap().is_empty());
    }

    #[test]
    fn param_counts_and_skips() {
        let d = data();
        let kinds = [ActivationKind::Relu, ActivationKind::MaxoutDiff];
        let rows = sweep(&kinds, &[4, 6], &[0, 1], &cfg(), &d, &d).unwrap();
        // MU-D needs widths divisible by 4, so width 6 is skipped
        assert_eq!(rows.len(), 3);
        for r in &rows {
            let spec = NetworkSpec::for_preset(Preset::toy(r.kind, r.width), 2).unwrap();
            assert_eq!(r.param_count, spec.param_count());
            assert_eq!(r.psnr.len(), 2);
        }
        assert_eq!(sweep_csv(&rows).lines().count(), 4);
        assert!(sweep_plot_data(&rows).contains("# mu-d"));
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
