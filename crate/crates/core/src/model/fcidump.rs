//! FCIDUMP reader/writer.
//!
//! The conventional layout: a namelist header carrying NORB, NELEC, MS2
//! (ORBSYM/ISYM are read and ignored), terminated by `/` or `&END`, followed
//! by `value p q r s` records with 1-based indices in chemists' notation.
//! `p q 0 0` is a one-electron entry, `0 0 0 0` the core energy, and
//! `p 0 0 0` (orbital-energy records written by some programs) is skipped.

use super::{EriTensor, IntegralSet};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

pub fn parse_fcidump(text: &str) -> Result<IntegralSet> {
    let mut lines = text.lines().enumerate();

    // Collect the header up to the namelist terminator.
    let mut header = String::new();
    let mut body_start = 0;
    for (lineno, line) in lines.by_ref() {
        let upper = line.to_uppercase();
        header.push(' ');
        header.push_str(&upper);
        if upper.contains("&END")
            || upper.split_whitespace().any(|t| t == "/")
            || upper.trim_end().ends_with('/')
        {
            body_start = lineno + 1;
            break;
        }
    }
    if body_start == 0 {
        return Err(Error::Parse {
            line: 1,
            msg: "missing namelist terminator ('/' or '&END')".into(),
        });
    }

    let norb = header_int(&header, "NORB")?.ok_or(Error::Parse {
        line: 1,
        msg: "missing header field NORB".into(),
    })? as usize;
    let nelec = header_int(&header, "NELEC")?.ok_or(Error::Parse {
        line: 1,
        msg: "missing header field NELEC".into(),
    })?;
    let ms2 = header_int(&header, "MS2")?.unwrap_or(0);
    if norb == 0 {
        return Err(Error::Parse {
            line: 1,
            msg: "NORB must be positive".into(),
        });
    }
    if nelec < 1 {
        return Err(Error::Parse {
            line: 1,
            msg: "NELEC must be at least 1".into(),
        });
    }
    if (nelec + ms2) % 2 != 0 {
        return Err(Error::Parse {
            line: 1,
            msg: "non-integer spin occupation: NELEC and MS2 have opposite parity".into(),
        });
    }
    let n_alpha = ((nelec + ms2) / 2) as usize;
    let n_beta = ((nelec - ms2) / 2) as usize;

    let mut oei = DMatrix::zeros(norb, norb);
    let mut eri = EriTensor::zeros(norb);
    let mut core_energy = 0.0;

    for (lineno, raw) in text.lines().enumerate().skip(body_start) {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected `value p q r s`, got {} fields", fields.len()),
            });
        }
        let value: f64 = fields[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("cannot parse value {:?}", fields[0]),
            })?;
        let mut ix = [0usize; 4];
        for (k, f) in fields[1..].iter().enumerate() {
            ix[k] = f.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("cannot parse index {f:?}"),
            })?;
        }
        for &i in &ix {
            if i > norb {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("orbital index {i} out of range (NORB = {norb})"),
                });
            }
        }
        match ix {
            [0, 0, 0, 0] => core_energy = value,
            [_, 0, 0, 0] => {} // orbital-energy record, not used
            [p, q, 0, 0] => {
                oei[(p - 1, q - 1)] = value;
                oei[(q - 1, p - 1)] = value;
            }
            [p, q, r, s] => {
                if p == 0 || q == 0 || r == 0 || s == 0 {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: "mixed zero/nonzero index pattern".into(),
                    });
                }
                eri.set_symmetric(p - 1, q - 1, r - 1, s - 1, value);
            }
        }
    }

    let set = IntegralSet {
        n_orb: norb,
        n_alpha,
        n_beta,
        core_energy,
        oei,
        eri,
        basis_is_orthonormal: true,
    };
    set.validate()?;
    Ok(set)
}

fn header_int(header: &str, key: &str) -> Result<Option<i64>> {
    // Tolerates `KEY=3`, `KEY = 3`, trailing commas.
    let Some(pos) = header.find(key) else {
        return Ok(None);
    };
    let rest = &header[pos + key.len()..];
    let rest = rest.trim_start().strip_prefix('=').ok_or(Error::Parse {
        line: 1,
        msg: format!("malformed header field {key}"),
    })?;
    let token: String = rest
        .trim_start()
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '-' || *c == '+')
        .collect();
    token.parse().map(Some).map_err(|_| Error::Parse {
        line: 1,
        msg: format!("malformed header field {key}"),
    })
}

/// Canonical text form; `parse_fcidump(serialize_fcidump(s))` reproduces every
/// matrix element exactly (values printed with shortest round-trip precision).
pub fn serialize_fcidump(set: &IntegralSet) -> String {
    let m = set.n_orb;
    let nelec = set.n_alpha + set.n_beta;
    let ms2 = set.n_alpha as i64 - set.n_beta as i64;
    let mut out = format!("&FCI NORB={m},NELEC={nelec},MS2={ms2},\n&END\n");
    for p in 0..m {
        for q in 0..=p {
            for r in 0..=p {
                let s_max = if r == p { q } else { r };
                for s in 0..=s_max {
                    let v = set.eri.get(p, q, r, s);
                    if v != 0.0 {
                        out.push_str(&format!("{} {} {} {} {}\n", v, p + 1, q + 1, r + 1, s + 1));
                    }
                }
            }
        }
    }
    for p in 0..m {
        for q in 0..=p {
            let v = set.oei[(p, q)];
            if v != 0.0 {
                out.push_str(&format!("{} {} {} 0 0\n", v, p + 1, q + 1));
            }
        }
    }
    out.push_str(&format!("{} 0 0 0 0\n", set.core_energy));
    out
}
