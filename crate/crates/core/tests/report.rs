use hetscan::grid::{self, UnfoldDirection};
use hetscan::report::{self, PipelineConfig, Verdict};
use hetscan::synth;

const SIDE: usize = 128;
const SEEDS: u64 = 20;

#[test]
fn verdict_is_recomputable_from_serialized_report() {
    for seed in 0..4 {
        let image = synth::row_fgn_image(64, 64, 0.6 + 0.05 * seed as f64, seed, 65535).unwrap();
        let original = report::analyze_image(&image, &PipelineConfig::default()).unwrap();
        let parsed = report::from_json(&report::to_json(&original).unwrap()).unwrap();
        let (metrics, verdict) =
            report::compare(&parsed.vertical, &parsed.horizontal, &parsed.thresholds).unwrap();
        assert_eq!(metrics, parsed.metrics);
        assert_eq!(verdict, parsed.verdict);
    }
}

#[test]
fn analyses_come_from_the_right_unfolding() {
    let image = synth::row_fgn_image(64, 80, 0.8, 2, 65535).unwrap();
    let cfg = PipelineConfig::default();
    let r = report::analyze_image(&image, &cfg).unwrap();
    for (analysis, dir) in [
        (&r.vertical, UnfoldDirection::Vertical),
        (&r.horizontal, UnfoldDirection::Horizontal),
    ] {
        let series = grid::unfold(&image, dir).unwrap();
        assert_eq!(
            analysis,
            &report::analyze_series(&series, dir, &cfg).unwrap()
        );
    }
    assert_eq!(r.input_digest, report::image_digest(&image));
    assert_eq!(r.effective.series_length, 64 * 80);
}

#[test]
fn transposing_swaps_directions() {
    let image = synth::row_fgn_image(64, 64, 0.8, 8, 65535).unwrap();
    let cfg = PipelineConfig::default();
    let a = report::analyze_image(&image, &cfg).unwrap();
    let b = report::analyze_image(&image.transpose(), &cfg).unwrap();
    assert_eq!(a.vertical.hurst, b.horizontal.hurst);
    assert_eq!(a.horizontal.energy, b.vertical.energy);
    assert_eq!(a.metrics, b.metrics);
}

// On the raw series the horizontal unfolding keeps the rows' long-range
// correlation and the vertical one does not, so the Hurst gap alone is
// enough to flag the image.
#[test]
fn raw_mode_hurst_gap_on_row_correlated_image() {
    let cfg = PipelineConfig {
        raw: true,
        ..PipelineConfig::default()
    };
    let mut exceeded = 0;
    for seed in 0..SEEDS {
        let image = synth::row_fgn_image(SIDE, SIDE, 0.8, 3_000 + seed, 65535).unwrap();
        let r = report::analyze_image(&image, &cfg).unwrap();
        assert!(r.horizontal.hurst.hurst > r.vertical.hurst.hurst);
        if r.metrics.delta_hurst > cfg.thresholds.hurst {
            exceeded += 1;
        }
    }
    assert!(exceeded as f64 >= 0.9 * SEEDS as f64, "{exceeded}/{SEEDS}");
}

#[test]
fn isotropic_noise_hurst_gap_stays_small() {
    let cfg = PipelineConfig::default();
    let mut below = 0;
    for seed in 0..SEEDS {
        let image =
            synth::series_to_square_grid(&synth::white_noise(SIDE * SIDE, 2_000 + seed), 65535)
                .unwrap();
        let r = report::analyze_image(&image, &cfg).unwrap();
        if r.metrics.delta_hurst <= cfg.thresholds.hurst {
            below += 1;
        }
        assert!(r.metrics.energy_l1 <= 2.0 && r.metrics.delta_width >= 0.0);
    }
    assert!(below as f64 >= 0.9 * SEEDS as f64, "{below}/{SEEDS}");
}

#[test]
fn raw_flag_is_recorded() {
    let image = synth::row_fgn_image(64, 64, 0.7, 1, 255).unwrap();
    let raw = report::analyze_image(
        &image,
        &PipelineConfig {
            raw: true,
            ..PipelineConfig::default()
        },
    )
    .unwrap();
    let fluct = report::analyze_image(&image, &PipelineConfig::default()).unwrap();
    assert!(raw.notes.analysis_series.starts_with("raw"));
    assert!(fluct.notes.analysis_series.starts_with("dwt"));
    assert_eq!(raw.horizontal.energy, fluct.horizontal.energy);
    assert_ne!(raw.horizontal.hurst, fluct.horizontal.hurst);
    assert_eq!(Verdict::Heterogeneous.as_str(), "Heterogeneous");
}
