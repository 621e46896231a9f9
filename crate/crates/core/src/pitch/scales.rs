//! Frequency scale conversions: Hz, Mel (2595·log10(1 + f/700)) and MIDI
//! note numbers (A4 = 440 Hz = 69).

use serde::{Deserialize, Serialize};

use super::{PitchError, Result};

const NOTE_NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

pub fn hz_to_mel(hz: f64) -> Result<f64> {
    if !(hz >= 0.0) || !hz.is_finite() {
        return Err(PitchError::Domain(format!("frequency {hz} Hz")));
    }
    Ok(2595.0 * (1.0 + hz / 700.0).log10())
}

pub fn mel_to_hz(mel: f64) -> Result<f64> {
    if !(mel >= 0.0) || !mel.is_finite() {
        return Err(PitchError::Domain(format!("pitch {mel} Mel")));
    }
    Ok(700.0 * (10f64.powf(mel / 2595.0) - 1.0))
}

/// Nearest MIDI note for a frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidiNote {
    pub number: i32,
    /// Scientific pitch notation with sharps, C4 = 60.
    pub name: String,
    /// Deviation from the note in cents, in [-50, 50).
    pub cents: f64,
}

pub fn hz_to_midi(hz: f64) -> Result<MidiNote> {
    if !(hz > 0.0) || !hz.is_finite() {
        return Err(PitchError::Domain(format!("frequency {hz} Hz")));
    }
    let raw = 69.0 + 12.0 * (hz / 440.0).log2();
    // Round half up, so the offset lands in [-50, 50).
    let number = (raw + 0.5).floor();
    let cents = (100.0 * (raw - number)).max(-50.0);
    let number = number as i32;
    Ok(MidiNote {
        number,
        name: note_name(number),
        cents,
    })
}

pub fn note_name(number: i32) -> String {
    let pitch_class = number.rem_euclid(12) as usize;
    let octave = number.div_euclid(12) - 1;
    format!("{}{}", NOTE_NAMES[pitch_class], octave)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn mel_reference_points() {
        assert_eq!(hz_to_mel(0.0).unwrap(), 0.0);
        // 2595 * log10(2)
        assert_abs_diff_eq!(hz_to_mel(700.0).unwrap(), 781.17, epsilon = 0.01);
        // 2595 * log10(1 + 10/7)
        assert_abs_diff_eq!(hz_to_mel(1000.0).unwrap(), 999.99, epsilon = 0.01);
        assert!(hz_to_mel(-1.0).is_err());
    }

    #[test]
    fn mel_inverse_reference_points() {
        assert_eq!(mel_to_hz(0.0).unwrap(), 0.0);
        // 700 * (10^(200/2595) - 1) = 135.9289
        assert_abs_diff_eq!(mel_to_hz(200.0).unwrap(), 135.93, epsilon = 0.01);
        assert!(mel_to_hz(-0.5).is_err());
    }

    #[test]
    fn midi_reference_points() {
        assert_eq!(
            hz_to_midi(440.0).unwrap(),
            MidiNote { number: 69, name: "A4".into(), cents: 0.0 }
        );
        assert_eq!(
            hz_to_midi(880.0).unwrap(),
            MidiNote { number: 81, name: "A5".into(), cents: 0.0 }
        );
        let c4 = hz_to_midi(261.63).unwrap();
        assert_eq!((c4.number, c4.name.as_str()), (60, "C4"));
        // 69 + 12·log2(261.63/440) = 60.000293
        assert_abs_diff_eq!(c4.cents, 0.0293, epsilon = 1e-3);
        assert!(hz_to_midi(0.0).is_err());
        assert!(hz_to_midi(-3.0).is_err());
    }

    #[test]
    fn midi_half_up_rounding() {
        // Exactly a quarter tone above A4 rounds up to A#4 at -50 cents.
        let hz = 440.0 * 2f64.powf(0.5 / 12.0);
        let note = hz_to_midi(hz).unwrap();
        assert_eq!(note.number, 70);
        assert_eq!(note.name, "A#4");
        assert!((note.cents + 50.0).abs() < 1e-6);
    }

    #[test]
    fn note_names_across_octaves() {
        assert_eq!(note_name(0), "C-1");
        assert_eq!(note_name(57), "A3");
        assert_eq!(note_name(61), "C#4");
        assert_eq!(note_name(-1), "B-2");
    }

    proptest! {
        #[test]
        fn mel_round_trip(f in 1e-3f64..20_000.0) {
            let back = mel_to_hz(hz_to_mel(f).unwrap()).unwrap();
            prop_assert!(((back - f) / f).abs() < 1e-6);
        }

        #[test]
        fn scales_are_monotone(a in 1e-2f64..1000.0, b in 1e-2f64..1000.0) {
            prop_assume!(a < b);
            prop_assert!(hz_to_mel(a).unwrap() < hz_to_mel(b).unwrap());
            let (ma, mb) = (hz_to_midi(a).unwrap(), hz_to_midi(b).unwrap());
            prop_assert!(f64::from(ma.number) + ma.cents / 100.0 < f64::from(mb.number) + mb.cents / 100.0);
        }

        #[test]
        fn cents_in_range(f in 1.0f64..5000.0) {
            let n = hz_to_midi(f).unwrap();
            prop_assert!((-50.0..50.0).contains(&n.cents));
        }
    }
}
