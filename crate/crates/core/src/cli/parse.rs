//! Parsing of complex literals such as `1+0i`, `-0.5-2i`, `3`, `i` or `2.5e-1i`.

use num_complex::Complex64;

fn parse_real(text: &str, original: &str) -> Result<f64, String> {
    text.parse::<f64>().map_err(|_| format!("invalid complex number '{original}'"))
}

fn parse_imaginary(text: &str, original: &str) -> Result<f64, String> {
    match text {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => parse_real(text, original),
    }
}

pub fn parse_complex(input: &str) -> Result<Complex64, String> {
    let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty complex number".to_string());
    }
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        let re = parse_real(&s, input)?;
        return if re.is_finite() { Ok(Complex64::new(re, 0.0)) } else { Err(format!("non-finite value '{input}'")) };
    };
    // Split at the last sign that is not the leading one and not part of an exponent.
    let bytes = body.as_bytes();
    let split =
        (1..bytes.len()).rev().find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let z = match split {
        Some(i) => Complex64::new(parse_real(&body[..i], input)?, parse_imaginary(&body[i..], input)?),
        None => Complex64::new(0.0, parse_imaginary(body, input)?),
    };
    if z.is_finite() {
        Ok(z)
    } else {
        Err(format!("non-finite value '{input}'"))
    }
}
