//! Weighted-draw files for `ispval pvalue`.
//!
//! ```text
//! # normalized=false
//! role,stat,log_w
//! observed,2.5,0.1
//! draw,1.0,-0.3
//! draw,3.1,0.7
//! ```
//!
//! Weights are taken as normalized unless a `# normalized=false` line says otherwise.
//! `stat` and `log_w` accept `inf` and `-inf`; `log_w = -inf` is a zero weight.

use ispval::{Error, LogWeight64, ObservedPoint64, Result, WeightedDraw64};

const HEADER: [&str; 3] = ["role", "stat", "log_w"];

#[derive(Debug)]
pub struct DrawFile {
    pub normalized: bool,
    pub observed: ObservedPoint64,
    pub draws: Vec<WeightedDraw64>,
}

fn parse_error(line: u64, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn normalized_directive(text: &str) -> Result<bool> {
    let mut normalized = true;
    for (i, raw) in text.lines().enumerate() {
        let Some(body) = raw.trim().strip_prefix('#') else { continue };
        if let Some((k, v)) = body.split_once('=') {
            if k.trim() == "normalized" {
                normalized = v
                    .trim()
                    .parse()
                    .map_err(|_| parse_error(i as u64 + 1, format!("normalized must be true or false, got `{}`", v.trim())))?;
            }
        }
    }
    Ok(normalized)
}

fn number(field: &str, line: u64, what: &str) -> Result<f64> {
    field.parse().map_err(|_| parse_error(line, format!("{what} `{field}` is not a number")))
}

pub fn parse_draws(text: &str) -> Result<DrawFile> {
    let normalized = normalized_directive(text)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(|e| parse_error(1, e.to_string()))?.clone();
    let header_line = header.position().map_or(1, |p| p.line());
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(parse_error(header_line, format!("expected header `{}`", HEADER.join(","))));
    }

    let mut observed = None;
    let mut draws = Vec::new();
    let mut last_line = header_line;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(last_line + 1, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(last_line + 1, |p| p.line());
        last_line = line;
        if record.len() != HEADER.len() {
            return Err(parse_error(line, format!("expected {} fields, found {}", HEADER.len(), record.len())));
        }
        let stat = number(&record[1], line, "stat")?;
        let log_w = number(&record[2], line, "log_w")?;
        let weight = LogWeight64::new(log_w, normalized).map_err(|e| parse_error(line, e.to_string()))?;
        match &record[0] {
            "observed" => {
                if observed.is_some() {
                    return Err(parse_error(line, "second observed row"));
                }
                observed = Some(ObservedPoint64::new(stat, weight).map_err(|e| parse_error(line, e.to_string()))?);
            }
            "draw" => draws.push(WeightedDraw64::new(stat, weight).map_err(|e| parse_error(line, e.to_string()))?),
            other => return Err(parse_error(line, format!("role must be `observed` or `draw`, got `{other}`"))),
        }
    }
    let observed = observed.ok_or_else(|| parse_error(last_line, "no observed row"))?;
    Ok(DrawFile { normalized, observed, draws })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_directive_and_rows() {
        let f = parse_draws("# normalized=false\nrole,stat,log_w\nobserved,1,0\ndraw,2,-inf\ndraw,inf,0.5\n").unwrap();
        assert!(!f.normalized);
        assert_eq!(f.observed.stat(), 1.0);
        assert_eq!(f.draws.len(), 2);
        assert!(f.draws[0].weight().is_zero());
        assert_eq!(f.draws[1].stat(), f64::INFINITY);
    }

    #[test]
    fn errors_name_the_line() {
        let cases = [
            ("role,stat,log_w\nobserved,1,0\ndraw,x,0\n", 3),
            ("role,stat,log_w\n# note\nobserved,1,0\ndraw,1\n", 4),
            ("role,stat,weight\nobserved,1,0\n", 1),
            ("role,stat,log_w\ndraw,1,0\n", 2),
            ("role,stat,log_w\nobserved,1,0\nobserved,1,0\n", 3),
            ("role,stat,log_w\nobserved,1,0\nsample,1,0\n", 3),
            ("# normalized=maybe\nrole,stat,log_w\nobserved,1,0\n", 1),
        ];
        for (text, line) in cases {
            match parse_draws(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
