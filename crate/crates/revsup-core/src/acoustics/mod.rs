//! Room simulation: scene geometry, impulse responses, dry source synthesis,
//! rendering, and scene directories on disk.

mod io;
mod render;
mod rir;
mod scene;
mod synth;

pub use io::{
    load_scene_dir, write_scene_dir, ManifestEntry, SceneManifest, SignalRole, CHANNEL_NAMES,
    SCENE_CONFIG_FILE, SCENE_MANIFEST_FILE,
};
pub use render::{render_scene, simulate_scene, RenderedScene};
pub use rir::{direct_delay_samples, simulate_direct_path, simulate_rir};
pub use scene::{SceneConfig, SceneSampler, SceneSpec};
pub use synth::{synth_dry_source, SourceKind};
