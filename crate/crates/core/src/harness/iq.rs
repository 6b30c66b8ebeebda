//! Raw cf32 sample files: interleaved little-endian `f32` I/Q pairs, symbols
//! back to back with their cyclic prefixes. No header; the dimensions come
//! from the configuration.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::{OfdmParams, TimeFrame};
use crate::scalar::Real;

pub fn write_iq_to<T: Real, W: Write>(frame: &TimeFrame<T>, mut w: W) -> Result<()> {
    for z in frame.samples() {
        let re = z.re.to_f32().unwrap_or(f32::NAN);
        let im = z.im.to_f32().unwrap_or(f32::NAN);
        w.write_all(&re.to_le_bytes())?;
        w.write_all(&im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_iq<T: Real>(frame: &TimeFrame<T>, path: impl AsRef<Path>) -> Result<()> {
    write_iq_to(frame, BufWriter::new(File::create(path)?))
}

pub fn read_iq_from<T: Real, R: Read>(mut r: R, params: &OfdmParams) -> Result<TimeFrame<T>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::dim(format!(
            "truncated IQ data: {} bytes is not a whole number of samples",
            bytes.len()
        )));
    }
    let samples = bytes.len() / 8;
    let per_symbol = params.symbol_len();
    if samples != per_symbol * params.l_symbols {
        return Err(Error::dim(format!(
            "IQ data has {samples} samples, params expect {} symbols of {per_symbol}",
            params.l_symbols
        )));
    }
    let value =
        |c: &[u8]| T::from_f32(f32::from_le_bytes([c[0], c[1], c[2], c[3]])).unwrap_or(T::nan());
    let flat: Vec<Complex<T>> = bytes
        .chunks_exact(8)
        .map(|c| Complex::new(value(&c[..4]), value(&c[4..])))
        .collect();
    Ok(TimeFrame {
        symbols: flat.chunks(per_symbol).map(<[_]>::to_vec).collect(),
        cp_len: params.cp_len,
    })
}

pub fn read_iq<T: Real>(path: impl AsRef<Path>, params: &OfdmParams) -> Result<TimeFrame<T>> {
    read_iq_from(BufReader::new(File::open(path)?), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txrx::{modulate_frame, random_grid, ConstellationKind, ConstellationSpec};

    #[test]
    fn round_trip_within_f32_precision() {
        let p = OfdmParams {
            n: 64,
            cp_len: 16,
            l_symbols: 3,
        };
        let g = random_grid::<f64>(&p, &ConstellationSpec::data(ConstellationKind::Qpsk), 2);
        let frame = modulate_frame(&g, &p).unwrap();
        let mut buf = Vec::new();
        write_iq_to(&frame, &mut buf).unwrap();
        assert_eq!(buf.len(), 3 * 80 * 8);
        let back: TimeFrame<f64> = read_iq_from(&buf[..], &p).unwrap();
        let err = frame
            .samples()
            .zip(back.samples())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn sizes() {
        let mut buf = Vec::new();
        write_iq_to(&TimeFrame::<f64>::empty(), &mut buf).unwrap();
        assert!(buf.is_empty());
        let three = TimeFrame {
            symbols: vec![vec![Complex::new(1.0f64, -1.0); 3]],
            cp_len: 0,
        };
        write_iq_to(&three, &mut buf).unwrap();
        assert_eq!(buf.len(), 24);
        assert_eq!(&buf[..8], &[0, 0, 0x80, 0x3f, 0, 0, 0x80, 0xbf]);
    }

    #[test]
    fn rejects_truncated_and_mismatched() {
        let p = OfdmParams {
            n: 4,
            cp_len: 0,
            l_symbols: 1,
        };
        assert!(matches!(
            read_iq_from::<f64, _>(&[0u8; 12][..], &p),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            read_iq_from::<f64, _>(&[0u8; 24][..], &p),
            Err(Error::Dimension(_))
        ));
        assert!(read_iq_from::<f64, _>(&[0u8; 32][..], &p).is_ok());
    }
}
