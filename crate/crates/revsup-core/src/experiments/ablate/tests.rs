use super::*;
use crate::acoustics::{render_scene, RenderedScene, SceneSpec};
use crate::audio::AudioBuffer;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn white(seed: u64, len: usize) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AudioBuffer::new(
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
        8000,
    )
    .unwrap()
}

fn small_scene(seed: u64) -> RenderedScene {
    let spec = SceneSpec {
        room_dims: [6.0, 5.0, 3.0],
        source_positions: vec![[2.0, 2.0, 1.5], [4.0, 3.2, 1.4]],
        mic_positions: vec![[3.0, 2.5, 1.5], [3.16, 2.5, 1.5]],
        absorption: 0.4,
        max_image_order: 8,
        speed_of_sound: 343.0,
        sample_rate: 8000,
        rir_length: 512,
    };
    render_scene(&spec, &[white(seed, 2500), white(seed + 100, 2500)]).unwrap()
}

/// A scene whose right channel is a plain delayed copy of the left, so the
/// informativeness screen scores it at the ceiling.
fn uninformative_scene(seed: u64) -> RenderedScene {
    let mut scene = small_scene(seed);
    let left = scene.mixtures[0].samples.clone();
    let mut right = vec![0.0; left.len()];
    for t in 4..left.len() {
        right[t] = 0.9 * left[t - 4];
    }
    scene.mixtures[1] = AudioBuffer::new(right, scene.mixtures[1].sample_rate).unwrap();
    scene
}

fn quick_config(axes: Vec<AblationAxis>) -> AblationConfig {
    AblationConfig {
        optimizer: OptimizeConfig {
            filter: FilterSpec::new(8, 24).unwrap(),
            max_iters: 6,
            ..OptimizeConfig::default()
        },
        axes,
        ..AblationConfig::default()
    }
}

#[test]
fn baseline_row_always_comes_first() {
    let scenes = vec![small_scene(1), small_scene(2)];
    let report = run_ablation(&scenes, &quick_config(vec![])).unwrap();
    assert_eq!(report.rows.len(), 1);
    let row = &report.rows[0];
    assert_eq!(row.name, "baseline");
    assert_eq!(row.mode, FilterMode::Independent);
    assert_eq!(row.criterion, LossCriterion::SiSdr);
    assert_eq!(row.screen_threshold_db, Some(10.0));
    assert_eq!(row.n_scenes, 2);
}

#[test]
fn each_axis_flips_exactly_one_ingredient() {
    let scenes = vec![small_scene(3), small_scene(4)];
    let report = run_ablation(&scenes, &quick_config(AblationAxis::ALL.to_vec())).unwrap();
    assert_eq!(report.rows.len(), 4);

    let joint = report.row("filter=joint").expect("joint row present");
    assert_eq!(joint.mode, FilterMode::Joint);
    assert_eq!(joint.criterion, LossCriterion::SiSdr);

    let snr = report.row("criterion=snr").expect("snr row present");
    assert_eq!(snr.mode, FilterMode::Independent);
    assert_eq!(snr.criterion, LossCriterion::Snr);

    let unscreened = report.row("threshold=none").expect("threshold row present");
    assert_eq!(unscreened.screen_threshold_db, None);
    assert_eq!(unscreened.mode, FilterMode::Independent);
}

#[test]
fn screening_drops_copies_except_on_the_threshold_row() {
    let scenes = vec![small_scene(5), uninformative_scene(6), small_scene(7)];
    let report = run_ablation(
        &scenes,
        &quick_config(vec![AblationAxis::Threshold]),
    )
    .unwrap();
    assert_eq!(report.row("baseline").unwrap().n_scenes, 2);
    assert_eq!(
        report.row("threshold=none").unwrap().n_scenes,
        3,
        "the unscreened row must optimize every scene"
    );
}

#[test]
fn all_copy_batches_are_rejected() {
    let scenes = vec![uninformative_scene(8)];
    let err = run_ablation(&scenes, &quick_config(vec![])).unwrap_err();
    assert!(
        err.to_string().contains("screening"),
        "unexpected error: {err}"
    );
}

#[test]
fn empty_batches_are_rejected() {
    assert!(run_ablation(&[], &quick_config(vec![])).is_err());
}

#[test]
fn axis_names_round_trip() {
    for axis in AblationAxis::ALL {
        assert_eq!(axis.name().parse::<AblationAxis>().unwrap(), axis);
    }
    assert!("loss".parse::<AblationAxis>().is_err());
}
