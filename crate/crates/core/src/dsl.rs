//! Text syntax for block sums.
//!
//! Grammar: sum := term ('+' term)*; term := block ('*' count)?;
//! block := 'J'int | 'G'int'~'? | 'H'int'('complex')' '~'?;
//! whitespace is insignificant, counts are ≥ 1 and H sizes even.
//! Examples: "J3*2 + G5~ + H6(1/2)", "H2(-1)*3".

use crate::blocks::{canonicalize_mu, Block, BlockSum};
use crate::error::{Error, Result};
use crate::scalar::{parse_scalar, Scalar};

/// Parses the DSL. μ values are canonicalized to the representative of
/// {μ, μ⁻¹}; every replacement is reported as a warning, never silent.
pub fn parse_blocksum(text: &str) -> Result<(BlockSum, Vec<String>)> {
    let bytes = text.as_bytes();
    let mut pos = 0usize;
    let mut warnings = Vec::new();
    let mut sum = BlockSum::empty();

    let skip_ws = |pos: &mut usize| {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
    };

    loop {
        skip_ws(&mut pos);
        if pos >= bytes.len() {
            return Err(Error::parse(pos, "expected a block"));
        }
        let letter_pos = pos;
        let letter = bytes[pos] as char;
        pos += 1;
        let size_start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == size_start {
            return Err(Error::parse(pos, "expected a block size"));
        }
        let size: usize = text[size_start..pos]
            .parse()
            .map_err(|_| Error::parse(size_start, "block size out of range"))?;
        let block = match letter {
            'J' | 'j' => Block::j(size)?,
            'G' | 'g' => {
                if pos < bytes.len() && bytes[pos] == b'~' {
                    pos += 1;
                    Block::gamma_tilde(size)?
                } else {
                    Block::gamma(size)?
                }
            }
            'H' | 'h' => {
                skip_ws(&mut pos);
                if pos >= bytes.len() || bytes[pos] != b'(' {
                    return Err(Error::parse(pos, "H block requires '(mu)'"));
                }
                pos += 1;
                let mu_start = pos;
                while pos < bytes.len() && bytes[pos] != b')' {
                    pos += 1;
                }
                if pos >= bytes.len() {
                    return Err(Error::parse(mu_start, "unterminated '(' in H block"));
                }
                let mu_text = text[mu_start..pos].trim();
                pos += 1; // consume ')'
                let mu = match parse_scalar(mu_text) {
                    Ok(Scalar::Exact(g)) => g,
                    Ok(Scalar::Float(_)) => {
                        return Err(Error::parse(
                            mu_start,
                            "mu must be an exact Gaussian rational",
                        ))
                    }
                    Err(Error::Parse { position, message }) => {
                        return Err(Error::parse(mu_start + position, message))
                    }
                    Err(e) => return Err(e),
                };
                let canonical = canonicalize_mu(&mu)?;
                if canonical != mu {
                    warnings.push(format!(
                        "mu = {mu} replaced by its canonical representative {canonical}"
                    ));
                }
                let tilde = if pos < bytes.len() && bytes[pos] == b'~' {
                    pos += 1;
                    true
                } else {
                    false
                };
                if tilde {
                    Block::h_tilde(size, canonical)?
                } else {
                    Block::h(size, canonical)?
                }
            }
            other => {
                return Err(Error::parse(
                    letter_pos,
                    format!("unknown block letter '{other}' (expected J, G or H)"),
                ))
            }
        };
        block
            .validate()
            .map_err(|v| Error::InvalidBlock(format!("{block} violates {v}")))?;
        skip_ws(&mut pos);
        let mut count = 1usize;
        if pos < bytes.len() && bytes[pos] == b'*' {
            pos += 1;
            skip_ws(&mut pos);
            let count_start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            if pos == count_start {
                return Err(Error::parse(pos, "expected a multiplicity after '*'"));
            }
            count = text[count_start..pos]
                .parse()
                .map_err(|_| Error::parse(count_start, "multiplicity out of range"))?;
            if count == 0 {
                return Err(Error::parse(count_start, "multiplicity must be >= 1"));
            }
        }
        sum.push_with_multiplicity(block, count);
        skip_ws(&mut pos);
        if pos >= bytes.len() {
            break;
        }
        if bytes[pos] != b'+' {
            return Err(Error::parse(
                pos,
                format!("expected '+' or end of input, found '{}'", text[pos..].chars().next().unwrap()),
            ));
        }
        pos += 1;
    }
    Ok((sum, warnings))
}

/// Canonical spelling; `parse_blocksum` inverts it exactly.
pub fn format_blocksum(sum: &BlockSum) -> String {
    sum.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational;

    #[test]
    fn parse_examples() {
        let (sum, warnings) = parse_blocksum("J3*2 + G5~ + H6(1/2)").unwrap();
        assert_eq!(sum.to_string(), "J3*2 + G5~ + H6(2)");
        assert_eq!(warnings.len(), 1, "mu canonicalization must warn");

        let (sum, warnings) = parse_blocksum("H2(-1)*3").unwrap();
        assert_eq!(sum.to_string(), "H2(-1)*3");
        assert!(warnings.is_empty());
        assert_eq!(sum.block_count(), 3);

        let (sum, _) = parse_blocksum("H4(1)").unwrap();
        assert_eq!(sum.to_string(), "H4(1)");
    }

    #[test]
    fn parse_rejects_invalid_blocks() {
        assert!(matches!(parse_blocksum("H2(1)"), Err(Error::InvalidBlock(m)) if m.contains("H2(1)")));
        assert!(matches!(parse_blocksum("H4(0)"), Err(Error::InvalidBlock(_))));
        assert!(matches!(parse_blocksum("H3(2)"), Err(Error::InvalidBlock(_))));
        assert!(matches!(parse_blocksum("J0"), Err(Error::InvalidBlock(_))));
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert!(matches!(parse_blocksum(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_blocksum("X3"), Err(Error::Parse { .. })));
        assert!(matches!(parse_blocksum("J3 + "), Err(Error::Parse { .. })));
        assert!(matches!(parse_blocksum("J3 G1"), Err(Error::Parse { .. })));
        assert!(matches!(parse_blocksum("H4(2"), Err(Error::Parse { .. })));
        assert!(matches!(parse_blocksum("J3*0"), Err(Error::Parse { .. })));
        assert!(matches!(parse_blocksum("H4(1.5)"), Err(Error::Parse { .. })));
    }

    #[test]
    fn roundtrip_preserves_canonical_sums() {
        let texts = [
            "J1",
            "J3*2 + G5~ + H6(2)",
            "H2(-1)*3",
            "G1*4",
            "H8(2i)~ + J2",
            "G2 + G2~",
        ];
        for t in texts {
            let (sum, _) = parse_blocksum(t).unwrap();
            assert_eq!(format_blocksum(&sum), t);
        }
    }

    #[test]
    fn mu_tilde_and_whitespace_forms() {
        let (sum, _) = parse_blocksum("  h6( -1 )~ *2+ j2 ").unwrap();
        assert_eq!(sum.to_string(), "H6(-1)~*2 + J2");
        let mu = sum.parts()[0].0.mu().unwrap().clone();
        assert_eq!(mu, -GaussianRational::one());
    }
}
