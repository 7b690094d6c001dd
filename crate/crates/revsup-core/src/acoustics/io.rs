//! Scene directories on disk.
//!
//! A scene directory holds `scene.json` (the config), `manifest.json` (one
//! entry per signal file), and float32 WAVs. Sources are numbered from 1 and
//! channels are "L" and "R", matching the mic order in the config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::wav::{read_wav, write_wav, SampleFormat};

use super::render::RenderedScene;
use super::scene::SceneConfig;

pub const SCENE_CONFIG_FILE: &str = "scene.json";
pub const SCENE_MANIFEST_FILE: &str = "manifest.json";
pub const CHANNEL_NAMES: [&str; 2] = ["L", "R"];

/// What a signal file contains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalRole {
    Dry,
    Image,
    Direct,
    Mixture,
}

/// One signal file in a scene directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub role: SignalRole,
    /// 1-based source number; absent for mixtures.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source: Option<u32>,
    /// "L" or "R"; absent for dry signals.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub channel: Option<String>,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub files: Vec<ManifestEntry>,
}

/// Writes config, manifest, and all signals into `dir`, creating it if needed.
pub fn write_scene_dir(dir: &Path, config: &SceneConfig, scene: &RenderedScene) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    let mut put = |entry: ManifestEntry, buffer: &AudioBuffer| -> Result<()> {
        write_wav(&dir.join(&entry.file), buffer, SampleFormat::Float32)?;
        entries.push(entry);
        Ok(())
    };

    for (k, d) in scene.dry.iter().enumerate() {
        let n = k as u32 + 1;
        put(
            ManifestEntry {
                role: SignalRole::Dry,
                source: Some(n),
                channel: None,
                file: format!("dry_{n}.wav"),
            },
            d,
        )?;
    }
    for (role, signals) in [
        (SignalRole::Image, &scene.images),
        (SignalRole::Direct, &scene.directs),
    ] {
        let prefix = match role {
            SignalRole::Image => "image",
            _ => "direct",
        };
        for (k, pair) in signals.iter().enumerate() {
            let n = k as u32 + 1;
            for ch in 0..2 {
                put(
                    ManifestEntry {
                        role,
                        source: Some(n),
                        channel: Some(CHANNEL_NAMES[ch].to_string()),
                        file: format!("{prefix}_{n}_{}.wav", CHANNEL_NAMES[ch]),
                    },
                    &pair[ch],
                )?;
            }
        }
    }
    for (name, mixture) in CHANNEL_NAMES.iter().zip(&scene.mixtures) {
        put(
            ManifestEntry {
                role: SignalRole::Mixture,
                source: None,
                channel: Some(name.to_string()),
                file: format!("mixture_{name}.wav"),
            },
            mixture,
        )?;
    }

    let manifest = SceneManifest { files: entries };
    std::fs::write(
        dir.join(SCENE_MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    std::fs::write(
        dir.join(SCENE_CONFIG_FILE),
        serde_json::to_string_pretty(config)?,
    )?;
    Ok(())
}

fn manifest_lookup(
    manifest: &SceneManifest,
    dir: &Path,
    role: SignalRole,
    source: Option<u32>,
    channel: Option<&str>,
) -> Result<PathBuf> {
    manifest
        .files
        .iter()
        .find(|e| {
            e.role == role && e.source == source && e.channel.as_deref() == channel
        })
        .map(|e| dir.join(&e.file))
        .ok_or_else(|| {
            Error::Format(format!(
                "manifest is missing a {role:?} entry for source {source:?} channel {channel:?}"
            ))
        })
}

/// Loads a scene directory written by [`write_scene_dir`].
pub fn load_scene_dir(dir: &Path) -> Result<(SceneConfig, RenderedScene)> {
    let config: SceneConfig =
        serde_json::from_str(&std::fs::read_to_string(dir.join(SCENE_CONFIG_FILE))?)?;
    config.spec.validate()?;
    let manifest: SceneManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join(SCENE_MANIFEST_FILE))?)?;

    let n_sources = config.spec.source_positions.len() as u32;
    let mut dry = Vec::new();
    let mut images = Vec::new();
    let mut directs = Vec::new();
    for k in 1..=n_sources {
        dry.push(read_wav(&manifest_lookup(
            &manifest,
            dir,
            SignalRole::Dry,
            Some(k),
            None,
        )?)?);
        let mut image_pair = Vec::new();
        let mut direct_pair = Vec::new();
        for ch in CHANNEL_NAMES {
            image_pair.push(read_wav(&manifest_lookup(
                &manifest,
                dir,
                SignalRole::Image,
                Some(k),
                Some(ch),
            )?)?);
            direct_pair.push(read_wav(&manifest_lookup(
                &manifest,
                dir,
                SignalRole::Direct,
                Some(k),
                Some(ch),
            )?)?);
        }
        images.push([image_pair.remove(0), image_pair.remove(0)]);
        directs.push([direct_pair.remove(0), direct_pair.remove(0)]);
    }
    let mut mixtures = Vec::new();
    for ch in CHANNEL_NAMES {
        mixtures.push(read_wav(&manifest_lookup(
            &manifest,
            dir,
            SignalRole::Mixture,
            None,
            Some(ch),
        )?)?);
    }
    let scene = RenderedScene {
        dry,
        images,
        directs,
        mixtures: [mixtures.remove(0), mixtures.remove(0)],
    };
    Ok((config, scene))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::render::render_scene;
    use crate::acoustics::scene::SceneSpec;
    use crate::acoustics::synth::{synth_dry_source, SourceKind};

    fn small_scene() -> (SceneConfig, RenderedScene) {
        let spec = SceneSpec {
            room_dims: [6.0, 5.0, 3.0],
            source_positions: vec![[2.0, 2.0, 1.5], [4.0, 3.2, 1.4]],
            mic_positions: vec![[3.0, 2.5, 1.5], [3.16, 2.5, 1.5]],
            absorption: 0.4,
            max_image_order: 6,
            speed_of_sound: 343.0,
            sample_rate: 8000,
            rir_length: 512,
        };
        let dry = vec![
            synth_dry_source(SourceKind::White, 1500, 8000, 1).unwrap(),
            synth_dry_source(SourceKind::Pink, 1500, 8000, 2).unwrap(),
        ];
        let scene = render_scene(&spec, &dry).unwrap();
        (SceneConfig { spec, seed: 5 }, scene)
    }

    #[test]
    fn scene_directory_round_trips() {
        let (config, scene) = small_scene();
        let dir = tempfile::tempdir().unwrap();
        write_scene_dir(dir.path(), &config, &scene).unwrap();
        let (config2, scene2) = load_scene_dir(dir.path()).unwrap();
        assert_eq!(config2, config);

        // Float32 storage quantizes; compare within its precision.
        let close = |a: &AudioBuffer, b: &AudioBuffer| {
            assert_eq!(a.len(), b.len());
            for (x, y) in a.samples.iter().zip(&b.samples) {
                assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{x} vs {y}");
            }
        };
        for k in 0..2 {
            close(&scene2.dry[k], &scene.dry[k]);
            for ch in 0..2 {
                close(&scene2.images[k][ch], &scene.images[k][ch]);
                close(&scene2.directs[k][ch], &scene.directs[k][ch]);
            }
        }
        for ch in 0..2 {
            close(&scene2.mixtures[ch], &scene.mixtures[ch]);
        }
    }

    #[test]
    fn manifest_lists_every_expected_file() {
        let (config, scene) = small_scene();
        let dir = tempfile::tempdir().unwrap();
        write_scene_dir(dir.path(), &config, &scene).unwrap();
        let manifest: SceneManifest = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join(SCENE_MANIFEST_FILE)).unwrap(),
        )
        .unwrap();
        // 2 dry + 4 images + 4 directs + 2 mixtures.
        assert_eq!(manifest.files.len(), 12);
        for entry in &manifest.files {
            assert!(dir.path().join(&entry.file).exists(), "missing {}", entry.file);
        }
        let mixtures: Vec<_> = manifest
            .files
            .iter()
            .filter(|e| e.role == SignalRole::Mixture)
            .collect();
        assert_eq!(mixtures.len(), 2);
        assert!(mixtures.iter().all(|e| e.source.is_none()));
        let json = serde_json::to_value(&manifest.files[0]).unwrap();
        assert_eq!(json["role"], "dry", "roles serialize in snake case");
    }

    #[test]
    fn missing_signal_file_is_an_io_error() {
        let (config, scene) = small_scene();
        let dir = tempfile::tempdir().unwrap();
        write_scene_dir(dir.path(), &config, &scene).unwrap();
        std::fs::remove_file(dir.path().join("image_1_L.wav")).unwrap();
        assert!(load_scene_dir(dir.path()).is_err());
    }

    #[test]
    fn incomplete_manifest_is_a_format_error() {
        let (config, scene) = small_scene();
        let dir = tempfile::tempdir().unwrap();
        write_scene_dir(dir.path(), &config, &scene).unwrap();
        let mut manifest: SceneManifest = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join(SCENE_MANIFEST_FILE)).unwrap(),
        )
        .unwrap();
        manifest.files.retain(|e| e.role != SignalRole::Mixture);
        std::fs::write(
            dir.path().join(SCENE_MANIFEST_FILE),
            serde_json::to_string(&manifest).unwrap(),
        )
        .unwrap();
        let err = load_scene_dir(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "got {err:?}");
    }
}
