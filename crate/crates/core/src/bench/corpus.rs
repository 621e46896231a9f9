use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio::{synth_tone, white_noise, AudioClip, AudioError, Framing, ToneSpec, Trajectory};

pub const CORPUS_RATE: u32 = 44_100;
const ITEM_SECONDS: f64 = 1.0;

pub const STEADY_HZ: [f64; 7] = [80.0, 100.0, 150.0, 220.0, 300.0, 440.0, 600.0];
const GLIDES_HZ: [(f64, f64); 4] = [(100.0, 200.0), (250.0, 150.0), (180.0, 360.0), (400.0, 300.0)];
const VIBRATO_HZ: [f64; 2] = [150.0, 300.0];
const VIBRATO_DEPTH: f64 = 0.03;
const VIBRATO_RATE_HZ: f64 = 5.0;
const VOWEL_HZ: [f64; 4] = [110.0, 180.0, 250.0, 350.0];
const VOWEL_HARMONICS: u32 = 5;
/// `INFINITY` is the clean variant.
pub const SNR_LEVELS_DB: [f64; 3] = [f64::INFINITY, 20.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Steady,
    Glide,
    Vibrato,
    Vowel,
    Noisy,
    Silence,
}

/// Ground truth for one analysis frame. `time` is the frame start; `f0_hz`
/// is the generating trajectory averaged over the frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthPoint {
    pub time: f64,
    pub f0_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub id: String,
    pub clip: AudioClip,
    pub truth: Vec<TruthPoint>,
    pub tags: BTreeSet<Tag>,
    pub framing: Framing,
}

impl CorpusItem {
    pub fn has_tag(&self, tag: Tag) -> bool {
        self.tags.contains(&tag)
    }

    pub fn is_clean(&self) -> bool {
        !self.has_tag(Tag::Noisy)
    }
}

/// Builds the labelled synthetic corpus. The output is a pure function of
/// `seed`: the seed picks amplitudes and noise realizations, never the
/// pitch content.
pub fn generate_corpus(seed: u64) -> Vec<CorpusItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let framing = Framing::for_rate(CORPUS_RATE);
    let mut items = Vec::new();

    let mut voiced = |id: String, f0: Trajectory, harmonics: u32, tag: Tag, rng: &mut ChaCha8Rng| {
        for snr in SNR_LEVELS_DB {
            let spec = ToneSpec {
                f0: f0.clone(),
                amplitude: rng.gen_range(0.3..0.8),
                duration: ITEM_SECONDS,
                snr_db: snr,
                harmonics,
                noise_seed: rng.gen(),
            };
            let mut clip = synth_tone(&spec, CORPUS_RATE).expect("corpus tones are in range");
            let mut tags = BTreeSet::from([tag]);
            let label = if snr.is_finite() {
                tags.insert(Tag::Noisy);
                format!("{id}-snr{snr:.0}")
            } else {
                format!("{id}-clean")
            };
            let truth = truth_for(&clip, framing, |t0, t1| Some(spec.f0.mean_over(t0, t1)));
            clip.source_label = label.clone();
            items.push(CorpusItem {
                id: label,
                clip,
                truth,
                tags,
                framing,
            });
        }
    };

    for hz in STEADY_HZ {
        voiced(format!("steady-{hz:.0}"), traj(Trajectory::constant(hz)), 1, Tag::Steady, &mut rng);
    }
    for (from, to) in GLIDES_HZ {
        let f0 = traj(Trajectory::glide(from, to, ITEM_SECONDS));
        voiced(format!("glide-{from:.0}-{to:.0}"), f0, 1, Tag::Glide, &mut rng);
    }
    for hz in VIBRATO_HZ {
        let f0 = traj(Trajectory::vibrato(hz, VIBRATO_DEPTH, VIBRATO_RATE_HZ, ITEM_SECONDS, 0.002));
        voiced(format!("vibrato-{hz:.0}"), f0, 1, Tag::Vibrato, &mut rng);
    }
    for hz in VOWEL_HZ {
        voiced(format!("vowel-{hz:.0}"), traj(Trajectory::constant(hz)), VOWEL_HARMONICS, Tag::Vowel, &mut rng);
    }

    let n = (ITEM_SECONDS * f64::from(CORPUS_RATE)) as usize;
    let silence = AudioClip::new(vec![0.0; n], CORPUS_RATE, "silence").expect("valid rate");
    items.push(CorpusItem {
        id: "silence".into(),
        truth: truth_for(&silence, framing, |_, _| None),
        clip: silence,
        tags: BTreeSet::from([Tag::Silence]),
        framing,
    });

    let mut noise = white_noise(rng.gen_range(0.05..0.3), ITEM_SECONDS, CORPUS_RATE, rng.gen()).expect("valid rate");
    noise.source_label = "noise".into();
    items.push(CorpusItem {
        id: "noise".into(),
        truth: truth_for(&noise, framing, |_, _| None),
        clip: noise,
        tags: BTreeSet::from([Tag::Noisy]),
        framing,
    });

    items
}

fn traj(t: Result<Trajectory, AudioError>) -> Trajectory {
    t.expect("corpus trajectories are in range")
}

fn truth_for(clip: &AudioClip, framing: Framing, f0: impl Fn(f64, f64) -> Option<f64>) -> Vec<TruthPoint> {
    let sr = f64::from(clip.sample_rate());
    (0..framing.frame_count(clip.len()))
        .map(|k| {
            let start = (k * framing.hop) as f64 / sr;
            let end = (k * framing.hop + framing.window) as f64 / sr;
            TruthPoint {
                time: start,
                f0_hz: f0(start, end),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_corpus() {
        let a = generate_corpus(42);
        let b = generate_corpus(42);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.truth, y.truth);
            let bits = |c: &AudioClip| c.samples().iter().map(|s| s.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&x.clip), bits(&y.clip));
        }
        assert_ne!(generate_corpus(43)[20].clip, a[20].clip);
    }

    #[test]
    fn composition() {
        let corpus = generate_corpus(0);
        let count = |tag: Tag, clean: bool| {
            corpus
                .iter()
                .filter(|i| i.has_tag(tag) && (i.is_clean() == clean))
                .count()
        };
        assert_eq!(count(Tag::Steady, true), 7);
        assert_eq!(count(Tag::Steady, false), 14);
        assert_eq!(count(Tag::Glide, true), 4);
        assert_eq!(count(Tag::Vibrato, true), 2);
        assert_eq!(count(Tag::Vowel, false), 8);
        assert_eq!(count(Tag::Silence, true), 1);
        assert!(corpus.iter().any(|i| i.id == "noise" && i.truth.iter().all(|p| p.f0_hz.is_none())));
    }

    #[test]
    fn truth_covers_every_frame() {
        for item in generate_corpus(1) {
            assert_eq!(item.truth.len(), item.framing.frame_count(item.clip.len()), "{}", item.id);
        }
    }

    #[test]
    fn silence_truth_absent_and_steady_truth_constant() {
        let corpus = generate_corpus(7);
        let silence = corpus.iter().find(|i| i.has_tag(Tag::Silence)).unwrap();
        assert!(silence.truth.iter().all(|p| p.f0_hz.is_none()));
        let steady = corpus.iter().find(|i| i.id == "steady-220-clean").unwrap();
        assert!(!steady.truth.is_empty());
        assert!(steady.truth.iter().all(|p| p.f0_hz == Some(220.0)));
    }

    #[test]
    fn glide_truth_follows_trajectory() {
        let corpus = generate_corpus(0);
        let glide = corpus.iter().find(|i| i.id == "glide-100-200-clean").unwrap();
        let first = glide.truth.first().unwrap();
        // Mean of a linear glide over the first window is its midpoint value.
        let mid = 100.0 + 100.0 * (2048.0 / 2.0 / 44_100.0);
        assert!((first.f0_hz.unwrap() - mid).abs() < 1e-9);
    }
}
