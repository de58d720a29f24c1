//! Audio ingestion and the DSP the pipeline needs: rational stretch
//! resampling and SNR-controlled noise mixing.

use std::path::{Path, PathBuf};

/// Rate every pipeline stage works at.
pub const PIPELINE_SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, thiserror::Error)]
pub enum AudioError {
    #[error("audio file not found: {0}")]
    NotFound(PathBuf),
    #[error("unsupported encoding: expected integer PCM 16-bit, got {format} with {bits} bits")]
    NotPcm16 { format: &'static str, bits: u16 },
    #[error("malformed WAV header: {0}")]
    MalformedHeader(String),
    #[error("i/o error reading audio: {0}")]
    Io(#[from] std::io::Error),
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("sample {index} is not a finite value in [-1, 1]: {value}")]
    InvalidSample { index: usize, value: f32 },
    #[error("empty audio buffer")]
    Empty,
    #[error("resampling factors must be >= 1 (got up={up}, down={down})")]
    InvalidFactor { up: u32, down: u32 },
    #[error("sample rate mismatch: {signal} Hz vs {noise} Hz")]
    SampleRateMismatch { signal: u32, noise: u32 },
    #[error("noise source is silent")]
    SilentNoise,
}

/// Mono PCM audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        if let Some((index, &value)) = samples
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || v.abs() > 1.0)
        {
            return Err(AudioError::InvalidSample { index, value });
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Builds a buffer after clamping every sample into `[-1, 1]`; non-finite values become 0.
    pub fn from_clamped(samples: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        let samples = samples
            .into_iter()
            .map(|v| if v.is_finite() { v.clamp(-1.0, 1.0) } else { 0.0 })
            .collect();
        Self::new(samples, sample_rate)
    }

    pub fn silence(duration_s: f64, sample_rate: u32) -> Result<Self, AudioError> {
        let n = (duration_s * sample_rate as f64).round() as usize;
        Self::new(vec![0.0; n], sample_rate)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Copy of the samples between two times, clamped to the buffer.
    pub fn slice_seconds(&self, start_s: f64, end_s: f64) -> AudioBuffer {
        let rate = self.sample_rate as f64;
        let a = ((start_s.max(0.0) * rate).round() as usize).min(self.samples.len());
        let b = ((end_s.max(0.0) * rate).round() as usize).clamp(a, self.samples.len());
        AudioBuffer {
            samples: self.samples[a..b].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// Resamples to `rate` Hz, leaving the buffer untouched when it already matches.
    pub fn to_rate(&self, rate: u32) -> Result<AudioBuffer, AudioError> {
        if rate == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        if rate == self.sample_rate {
            return Ok(self.clone());
        }
        let g = gcd(rate, self.sample_rate);
        let out = resample_poly(&self.samples, rate / g, self.sample_rate / g)?;
        AudioBuffer::from_clamped(out, rate)
    }

    /// PCM16 little-endian encoding used on the adapter wire.
    pub fn to_pcm16_bytes(&self) -> Vec<u8> {
        self.samples
            .iter()
            .flat_map(|&s| f32_to_pcm16(s).to_le_bytes())
            .collect()
    }

    pub fn from_pcm16_bytes(bytes: &[u8], sample_rate: u32) -> Result<AudioBuffer, AudioError> {
        if bytes.len() % 2 != 0 {
            return Err(AudioError::MalformedHeader(
                "PCM16 payload has an odd number of bytes".into(),
            ));
        }
        let samples = bytes
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]) as f32 / 32768.0)
            .collect();
        AudioBuffer::new(samples, sample_rate)
    }
}

pub(crate) fn f32_to_pcm16(s: f32) -> i16 {
    (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

fn rms(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let energy: f64 = samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
    (energy / samples.len() as f64).sqrt()
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Reads a PCM16 RIFF/WAVE file, downmixing to mono by channel mean.
///
/// The buffer keeps the file's sample rate; use [`AudioBuffer::to_rate`]
/// to bring it to [`PIPELINE_SAMPLE_RATE`].
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, AudioError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(AudioError::NotFound(path.to_path_buf()));
    }
    let reader = hound::WavReader::open(path).map_err(map_hound_error)?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        let format = match spec.sample_format {
            hound::SampleFormat::Int => "integer PCM",
            hound::SampleFormat::Float => "IEEE float",
        };
        return Err(AudioError::NotPcm16 {
            format,
            bits: spec.bits_per_sample,
        });
    }
    let channels = spec.channels.max(1) as usize;
    let raw: Vec<i16> = reader
        .into_samples::<i16>()
        .collect::<Result<_, _>>()
        .map_err(map_hound_error)?;
    let samples = raw
        .chunks(channels)
        .map(|frame| {
            let sum: f64 = frame.iter().map(|&s| s as f64 / 32768.0).sum();
            (sum / frame.len() as f64) as f32
        })
        .collect();
    AudioBuffer::new(samples, spec.sample_rate)
}

fn map_hound_error(err: hound::Error) -> AudioError {
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            AudioError::MalformedHeader(format!("truncated file: {e}"))
        }
        hound::Error::IoError(e) => AudioError::Io(e),
        hound::Error::FormatError(msg) => AudioError::MalformedHeader(msg.to_string()),
        hound::Error::Unsupported => AudioError::NotPcm16 {
            format: "unsupported format code",
            bits: 0,
        },
        hound::Error::InvalidSampleFormat | hound::Error::UnfinishedSample => {
            AudioError::MalformedHeader(err.to_string())
        }
        other => AudioError::MalformedHeader(other.to_string()),
    }
}

/// Rational resampling by `up/down`, keeping the sample rate label unchanged.
///
/// Played back at the original rate, speech is slowed by `up/down` and the
/// pitch drops accordingly. Output length is `ceil(len * up / down)`.
pub fn stretch(buffer: &AudioBuffer, up: u32, down: u32) -> Result<AudioBuffer, AudioError> {
    if buffer.is_empty() {
        return Err(AudioError::Empty);
    }
    let out = resample_poly(buffer.samples(), up, down)?;
    AudioBuffer::from_clamped(out, buffer.sample_rate())
}

const KAISER_BETA: f64 = 5.0;
const HALF_TAPS_PER_FACTOR: usize = 10;

/// Windowed-sinc low-pass prototype for an `up/down` polyphase resampler,
/// scaled so that every polyphase branch has unit DC gain.
fn design_lowpass(up: usize, down: usize) -> Vec<f64> {
    let max_factor = up.max(down);
    let half = HALF_TAPS_PER_FACTOR * max_factor;
    let len = 2 * half + 1;
    let cutoff = 1.0 / max_factor as f64;
    let i0_beta = bessel_i0(KAISER_BETA);
    let mut taps: Vec<f64> = (0..len)
        .map(|n| {
            let t = n as f64 - half as f64;
            let ratio = t / half as f64;
            let window = bessel_i0(KAISER_BETA * (1.0 - ratio * ratio).max(0.0).sqrt()) / i0_beta;
            cutoff * sinc(cutoff * t) * window
        })
        .collect();
    for phase in 0..up {
        let sum: f64 = taps.iter().skip(phase).step_by(up).sum();
        if sum.abs() > f64::EPSILON {
            taps.iter_mut().skip(phase).step_by(up).for_each(|h| *h /= sum);
        }
    }
    taps
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half_sq = (x / 2.0) * (x / 2.0);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= half_sq / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Polyphase rational resampler over raw samples.
pub fn resample_poly(samples: &[f32], up: u32, down: u32) -> Result<Vec<f32>, AudioError> {
    if up == 0 || down == 0 {
        return Err(AudioError::InvalidFactor { up, down });
    }
    let g = gcd(up, down);
    let (up, down) = ((up / g) as usize, (down / g) as usize);
    if up == 1 && down == 1 {
        return Ok(samples.to_vec());
    }
    let taps = design_lowpass(up, down);
    let delay = (taps.len() - 1) / 2;
    let n_in = samples.len();
    let n_out = (n_in * up).div_ceil(down);
    let mut out = Vec::with_capacity(n_out);
    for m in 0..n_out {
        // position in the zero-stuffed upsampled stream, shifted by the filter delay
        let pos = m * down + delay;
        let mut acc = 0.0f64;
        let mut k = pos % up;
        while k < taps.len() && k <= pos {
            let idx = (pos - k) / up;
            if idx < n_in {
                acc += taps[k] * samples[idx] as f64;
            }
            k += up;
        }
        out.push(acc as f32);
    }
    Ok(out)
}

/// Result of [`mix_noise_detailed`].
#[derive(Debug, Clone)]
pub struct NoiseMix {
    pub mixed: AudioBuffer,
    /// Gain applied to the (tiled) noise.
    pub noise_scale: f64,
    /// SNR between the signal and the scaled noise, measured before clipping.
    pub achieved_snr_db: f64,
}

/// Adds `noise` to `signal` at the requested SNR; the sum is clipped to `[-1, 1]`.
pub fn mix_noise(
    signal: &AudioBuffer,
    noise: &AudioBuffer,
    snr_db: f64,
) -> Result<AudioBuffer, AudioError> {
    mix_noise_detailed(signal, noise, snr_db).map(|m| m.mixed)
}

pub fn mix_noise_detailed(
    signal: &AudioBuffer,
    noise: &AudioBuffer,
    snr_db: f64,
) -> Result<NoiseMix, AudioError> {
    if signal.sample_rate() != noise.sample_rate() {
        return Err(AudioError::SampleRateMismatch {
            signal: signal.sample_rate(),
            noise: noise.sample_rate(),
        });
    }
    if noise.is_empty() {
        return Err(AudioError::SilentNoise);
    }
    let tiled: Vec<f32> = noise
        .samples()
        .iter()
        .copied()
        .cycle()
        .take(signal.len())
        .collect();
    let noise_rms = rms(&tiled);
    if noise_rms <= 0.0 {
        return Err(AudioError::SilentNoise);
    }
    let signal_rms = signal.rms();
    let noise_scale = signal_rms / (noise_rms * 10f64.powf(snr_db / 20.0));
    let scaled: Vec<f32> = tiled
        .iter()
        .map(|&n| (n as f64 * noise_scale) as f32)
        .collect();
    let achieved_snr_db = 20.0 * (signal_rms / rms(&scaled)).log10();
    let mixed = signal
        .samples()
        .iter()
        .zip(&scaled)
        .map(|(&s, &n)| s + n)
        .collect();
    Ok(NoiseMix {
        mixed: AudioBuffer::from_clamped(mixed, signal.sample_rate())?,
        noise_scale,
        achieved_snr_db,
    })
}
