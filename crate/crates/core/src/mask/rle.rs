use serde::{Deserialize, Serialize};

use super::BinaryMask;
use crate::error::{Error, Result};

/// Uncompressed COCO run-length encoding: column-major runs, alternating
/// false/true, starting with a (possibly empty) false run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RleJson", into = "RleJson")]
pub struct RleMask {
    pub height: usize,
    pub width: usize,
    pub counts: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RleJson {
    size: [usize; 2],
    counts: Vec<u64>,
}

impl TryFrom<RleJson> for RleMask {
    type Error = Error;

    fn try_from(json: RleJson) -> Result<Self> {
        let rle = RleMask {
            height: json.size[0],
            width: json.size[1],
            counts: json.counts,
        };
        rle.validate()?;
        Ok(rle)
    }
}

impl From<RleMask> for RleJson {
    fn from(rle: RleMask) -> Self {
        RleJson {
            size: [rle.height, rle.width],
            counts: rle.counts,
        }
    }
}

impl RleMask {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::MalformedEncoding(format!(
                "frame {}x{} has no pixels",
                self.height, self.width
            )));
        }
        let total: u64 = self.counts.iter().sum();
        let expected = (self.height * self.width) as u64;
        if total != expected {
            return Err(Error::MalformedEncoding(format!(
                "run lengths sum to {total}, frame {}x{} holds {expected} pixels",
                self.height, self.width
            )));
        }
        if let Some(i) = self.counts.iter().skip(1).position(|&c| c == 0) {
            return Err(Error::MalformedEncoding(format!(
                "zero-length run at position {}",
                i + 1
            )));
        }
        Ok(())
    }

    /// Number of true pixels, read off the odd runs.
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).sum()
    }
}

pub fn decode_rle(rle: &RleMask) -> Result<BinaryMask> {
    rle.validate()?;
    let (h, w) = (rle.height, rle.width);
    let mut mask = BinaryMask::new(h, w);
    let mut index = 0usize;
    for (run, &count) in rle.counts.iter().enumerate() {
        let end = index + count as usize;
        if run % 2 == 1 {
            for i in index..end {
                // column-major index i -> (i % h, i / h)
                mask.set(i % h, i / h, true);
            }
        }
        index = end;
    }
    Ok(mask)
}

pub fn encode_rle(mask: &BinaryMask) -> RleMask {
    let (h, w) = mask.frame();
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u64;
    for c in 0..w {
        for r in 0..h {
            let v = mask.get(r, c);
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    RleMask {
        height: h,
        width: w,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decode_all_false_and_all_true() {
        let empty = RleMask {
            height: 4,
            width: 4,
            counts: vec![16],
        };
        assert_eq!(decode_rle(&empty).unwrap(), BinaryMask::new(4, 4));
        let full = RleMask {
            height: 4,
            width: 4,
            counts: vec![0, 16],
        };
        assert_eq!(decode_rle(&full).unwrap(), BinaryMask::full(4, 4));
    }

    #[test]
    fn decode_is_column_major() {
        // Column-major indices 1 and 2 are true: (1,0) and (0,1) in a 2x3 frame.
        let rle = RleMask {
            height: 2,
            width: 3,
            counts: vec![1, 2, 3],
        };
        let m = decode_rle(&rle).unwrap();
        let expected =
            BinaryMask::from_pixels(2, 3, vec![false, true, false, true, false, false]).unwrap();
        assert_eq!(m, expected);
        assert_eq!(rle.area(), 2);
    }

    #[test]
    fn decode_rejects_malformed() {
        let short = RleMask {
            height: 2,
            width: 2,
            counts: vec![1, 2],
        };
        assert!(matches!(
            decode_rle(&short),
            Err(Error::MalformedEncoding(_))
        ));
        let zero_run = RleMask {
            height: 2,
            width: 2,
            counts: vec![1, 0, 3],
        };
        assert!(decode_rle(&zero_run).is_err());
    }

    #[test]
    fn encode_canonical_forms() {
        assert_eq!(encode_rle(&BinaryMask::new(4, 4)).counts, vec![16]);
        assert_eq!(encode_rle(&BinaryMask::full(4, 4)).counts, vec![0, 16]);
    }

    #[test]
    fn json_form_is_coco_compatible() {
        let rle: RleMask =
            serde_json::from_str(r#"{"size": [2, 3], "counts": [1, 2, 3]}"#).unwrap();
        assert_eq!((rle.height, rle.width), (2, 3));
        assert_eq!(
            serde_json::to_string(&rle).unwrap(),
            r#"{"size":[2,3],"counts":[1,2,3]}"#
        );
        assert!(serde_json::from_str::<RleMask>(r#"{"size": [2, 3], "counts": [5]}"#).is_err());
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        (1usize..=64, 1usize..=64).prop_flat_map(|(h, w)| {
            proptest::collection::vec(any::<bool>(), h * w)
                .prop_map(move |px| BinaryMask::from_pixels(h, w, px).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn roundtrip_is_identity(mask in arb_mask()) {
            let rle = encode_rle(&mask);
            prop_assert!(rle.validate().is_ok());
            prop_assert_eq!(rle.area() as usize, mask.area());
            prop_assert_eq!(decode_rle(&rle).unwrap(), mask);
        }
    }
}
