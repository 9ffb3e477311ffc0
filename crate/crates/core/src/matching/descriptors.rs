use super::MatchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DescriptorKind {
    /// Float vectors compared with the L2 distance.
    Float32,
    /// Bit strings compared with the Hamming distance.
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
enum Data {
    Float(Vec<f32>),
    Binary(Vec<u8>),
}

/// Row-major descriptor matrix. For binary sets `dim` counts bits and each
/// row is padded to whole bytes with zero bits.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    count: usize,
    dim: usize,
    data: Data,
}

impl DescriptorSet {
    pub fn float(count: usize, dim: usize, data: Vec<f32>) -> Result<Self, MatchError> {
        if dim == 0 {
            return Err(MatchError::InvalidDescriptors("dimension must be positive".into()));
        }
        if data.len() != count * dim {
            return Err(MatchError::InvalidDescriptors(format!(
                "{} values for {count} x {dim} descriptors",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(MatchError::InvalidDescriptors(format!("non-finite value in row {}", k / dim)));
        }
        Ok(Self { count, dim, data: Data::Float(data) })
    }

    pub fn binary(count: usize, bits: usize, data: Vec<u8>) -> Result<Self, MatchError> {
        if bits == 0 {
            return Err(MatchError::InvalidDescriptors("dimension must be positive".into()));
        }
        let row = bits.div_ceil(8);
        if data.len() != count * row {
            return Err(MatchError::InvalidDescriptors(format!(
                "{} bytes for {count} x {bits}-bit descriptors",
                data.len()
            )));
        }
        let spare = row * 8 - bits;
        if spare > 0 {
            let mask = !(0xffu8 >> spare);
            for (r, chunk) in data.chunks(row).enumerate() {
                if chunk[row - 1] & !mask != 0 {
                    return Err(MatchError::InvalidDescriptors(format!("row {r} has non-zero padding bits")));
                }
            }
        }
        Ok(Self { count, dim: bits, data: Data::Binary(data) })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> DescriptorKind {
        match self.data {
            Data::Float(_) => DescriptorKind::Float32,
            Data::Binary(_) => DescriptorKind::Binary,
        }
    }

    /// Bytes per binary row, or values per float row.
    pub fn row_len(&self) -> usize {
        match self.data {
            Data::Float(_) => self.dim,
            Data::Binary(_) => self.dim.div_ceil(8),
        }
    }

    pub fn float_data(&self) -> Option<&[f32]> {
        match &self.data {
            Data::Float(v) => Some(v),
            Data::Binary(_) => None,
        }
    }

    pub fn binary_data(&self) -> Option<&[u8]> {
        match &self.data {
            Data::Binary(v) => Some(v),
            Data::Float(_) => None,
        }
    }

    /// Distance between row `a` of `self` and row `b` of `other`.
    ///
    /// Float rows are accumulated in double precision.
    #[inline]
    pub fn distance(&self, a: usize, other: &DescriptorSet, b: usize) -> f64 {
        let n = self.row_len();
        match (&self.data, &other.data) {
            (Data::Float(x), Data::Float(y)) => squared_l2(&x[a * n..(a + 1) * n], &y[b * n..(b + 1) * n]).sqrt(),
            (Data::Binary(x), Data::Binary(y)) => hamming(&x[a * n..(a + 1) * n], &y[b * n..(b + 1) * n]),
            _ => f64::NAN,
        }
    }

    /// Row-major payload views for tight loops.
    pub(crate) fn rows(&self) -> Rows<'_> {
        match &self.data {
            Data::Float(x) => Rows::Float(x),
            Data::Binary(x) => Rows::Binary(x),
        }
    }

    /// Copies the given rows, in order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let n = self.row_len();
        let data = match &self.data {
            Data::Float(v) => Data::Float(rows.iter().flat_map(|&r| v[r * n..(r + 1) * n].iter().copied()).collect()),
            Data::Binary(v) => Data::Binary(rows.iter().flat_map(|&r| v[r * n..(r + 1) * n].iter().copied()).collect()),
        };
        Self { count: rows.len(), dim: self.dim, data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamming_one_bit() {
        let d = DescriptorSet::binary(2, 16, vec![0b1010_0000, 0x0f, 0b1010_0000, 0x0e]).unwrap();
        assert_eq!(d.distance(0, &d, 1), 1.0);
        assert_eq!(d.distance(1, &d, 1), 0.0);
    }

    #[test]
    fn padding_bits_must_be_zero() {
        assert!(DescriptorSet::binary(1, 12, vec![0xff, 0xf0]).is_ok());
        assert!(DescriptorSet::binary(1, 12, vec![0xff, 0xf1]).is_err());
        assert!(DescriptorSet::binary(1, 12, vec![0xff]).is_err());
    }

    #[test]
    fn float_l2_and_validation() {
        let d = DescriptorSet::float(2, 2, vec![0.0, 0.0, 3.0, 4.0]).unwrap();
        assert_eq!(d.distance(0, &d, 1), 5.0);
        assert!(DescriptorSet::float(2, 2, vec![0.0; 3]).is_err());
        assert!(DescriptorSet::float(1, 1, vec![f32::NAN]).is_err());
        let picked = d.select(&[1]);
        assert_eq!(picked.float_data().unwrap(), &[3.0, 4.0]);
    }
}

pub(crate) enum Rows<'a> {
    Float(&'a [f32]),
    Binary(&'a [u8]),
}

/// Squared Euclidean distance with four independent f64 accumulators, so the
/// loop vectorizes. Every float distance in the crate goes through here.
#[inline]
pub(crate) fn squared_l2(x: &[f32], y: &[f32]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (p, q) in xc.zip(yc) {
        for k in 0..4 {
            let d = p[k] as f64 - q[k] as f64;
            acc[k] += d * d;
        }
    }
    for (k, (p, q)) in xr.iter().zip(yr).enumerate() {
        let d = *p as f64 - *q as f64;
        acc[k] += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

#[inline]
pub(crate) fn hamming(x: &[u8], y: &[u8]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p ^ q).count_ones()).sum::<u32>() as f64
}
