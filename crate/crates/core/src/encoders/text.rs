use crate::error::{Error, Result};

pub const TEXT_LENGTH: usize = 200;
pub const CHAR_BITS: usize = 7;

/// Encode a description as 200 rows of 7 bits (least significant first).
///
/// The text is lowercased, characters outside 7-bit ASCII become spaces, and
/// the result is repeated until it reaches 200 characters, then truncated.
pub fn text_to_binary(description: &str) -> Result<Vec<[f64; CHAR_BITS]>> {
    let codes: Vec<u8> = description
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_ascii() { c as u8 } else { b' ' })
        .collect();
    if codes.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::Encoding("description is empty after sanitizing".into()));
    }
    Ok(codes
        .iter()
        .cycle()
        .take(TEXT_LENGTH)
        .map(|&code| std::array::from_fn(|bit| f64::from((code >> bit) & 1)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeats_to_two_hundred_rows() {
        let m = text_to_binary("abc").unwrap();
        assert_eq!(m.len(), 200);
        let a = text_to_binary("a").unwrap()[0];
        let b = text_to_binary("b").unwrap()[0];
        let c = text_to_binary("c").unwrap()[0];
        for (i, row) in m.iter().enumerate() {
            assert_eq!(*row, [a, b, c][i % 3]);
        }
    }

    #[test]
    fn lowercase_a_bits_lsb_first() {
        let m = text_to_binary("a").unwrap();
        assert_eq!(m[0], [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        // uppercase folds onto lowercase
        assert_eq!(text_to_binary("A").unwrap()[0], m[0]);
    }

    #[test]
    fn long_text_is_truncated_and_binary() {
        let long = "Lane blocked due to accident on US-101 ".repeat(10);
        let m = text_to_binary(&long).unwrap();
        assert_eq!(m.len(), 200);
        assert!(m.iter().flatten().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn non_ascii_becomes_space_and_empty_is_error() {
        let m = text_to_binary("é1").unwrap();
        assert_eq!(m[0], text_to_binary(" 1").unwrap()[0]);
        assert!(text_to_binary("").is_err());
        assert!(text_to_binary("ééé").is_err());
    }
}
