//! Cavity-mode file reader/writer.
//!
//! Format: first non-comment line `NMODES k NORB m`; then per mode one block
//!
//! ```text
//! MODE omega=<real> nmax=<int> dnuc=<real>
//! p q value
//! ...
//! ```
//!
//! Coupling entries are 1-based and the upper triangle suffices (mirror-filled);
//! omitted pairs default to 0. `#` begins a comment. `dnuc` may be omitted.

use super::{CavitySpec, ModeSpec};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

pub fn parse_cavity(text: &str) -> Result<CavitySpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (lineno, head) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty cavity file".into(),
    })?;
    let head_fields: Vec<&str> = head.split_whitespace().collect();
    if head_fields.len() != 4 || head_fields[0] != "NMODES" || head_fields[2] != "NORB" {
        return Err(Error::Parse {
            line: lineno,
            msg: "expected `NMODES k NORB m`".into(),
        });
    }
    let n_modes: usize = head_fields[1].parse().map_err(|_| Error::Parse {
        line: lineno,
        msg: "cannot parse NMODES".into(),
    })?;
    let n_orb: usize = head_fields[3].parse().map_err(|_| Error::Parse {
        line: lineno,
        msg: "cannot parse NORB".into(),
    })?;
    if n_orb == 0 {
        return Err(Error::Parse {
            line: lineno,
            msg: "NORB must be positive".into(),
        });
    }

    let mut modes: Vec<ModeSpec> = Vec::new();
    let mut seen: Vec<Vec<(usize, usize)>> = Vec::new();

    for (lineno, line) in lines {
        if let Some(rest) = line.strip_prefix("MODE") {
            let mut omega = None;
            let mut n_max = None;
            let mut dnuc = 0.0;
            for field in rest.split_whitespace() {
                let (key, value) = field.split_once('=').ok_or(Error::Parse {
                    line: lineno,
                    msg: format!("expected key=value, got {field:?}"),
                })?;
                match key {
                    "omega" => {
                        omega = Some(value.parse::<f64>().map_err(|_| Error::Parse {
                            line: lineno,
                            msg: format!("cannot parse omega {value:?}"),
                        })?)
                    }
                    "nmax" => {
                        n_max = Some(value.parse::<usize>().map_err(|_| Error::Parse {
                            line: lineno,
                            msg: format!("cannot parse nmax {value:?}"),
                        })?)
                    }
                    "dnuc" => {
                        dnuc = value.parse::<f64>().map_err(|_| Error::Parse {
                            line: lineno,
                            msg: format!("cannot parse dnuc {value:?}"),
                        })?
                    }
                    other => {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("unknown MODE key {other:?}"),
                        })
                    }
                }
            }
            let omega = omega.ok_or(Error::Parse {
                line: lineno,
                msg: "MODE is missing omega=".into(),
            })?;
            let n_max = n_max.ok_or(Error::Parse {
                line: lineno,
                msg: "MODE is missing nmax=".into(),
            })?;
            modes.push(ModeSpec {
                omega,
                coupling: DMatrix::zeros(n_orb, n_orb),
                nuclear_projection: dnuc,
                n_max,
            });
            seen.push(Vec::new());
        } else {
            let mode = modes.last_mut().ok_or(Error::Parse {
                line: lineno,
                msg: "coupling entry before any MODE block".into(),
            })?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected `p q value`".into(),
                });
            }
            let p: usize = fields[0].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("cannot parse index {:?}", fields[0]),
            })?;
            let q: usize = fields[1].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("cannot parse index {:?}", fields[1]),
            })?;
            let value: f64 = fields[2].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("cannot parse value {:?}", fields[2]),
            })?;
            if p == 0 || q == 0 || p > n_orb || q > n_orb {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("coupling index ({p},{q}) out of range (NORB = {n_orb})"),
                });
            }
            let (i, j) = (p - 1, q - 1);
            let key = (i.min(j), i.max(j));
            let entries = seen.last_mut().unwrap();
            if entries.contains(&key) && mode.coupling[key] != value {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("duplicate coupling entry ({p},{q}) with conflicting value"),
                });
            }
            entries.push(key);
            mode.coupling[(i, j)] = value;
            mode.coupling[(j, i)] = value;
        }
    }

    if modes.len() != n_modes {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "header declares {n_modes} modes but {} MODE blocks found",
                modes.len()
            ),
        });
    }
    let spec = CavitySpec { modes };
    spec.validate(n_orb)?;
    Ok(spec)
}

pub fn serialize_cavity(spec: &CavitySpec) -> String {
    let n_orb = spec.modes.first().map_or(0, |m| m.coupling.nrows());
    let mut out = format!("NMODES {} NORB {}\n", spec.modes.len(), n_orb.max(1));
    for mode in &spec.modes {
        out.push_str(&format!(
            "MODE omega={} nmax={} dnuc={}\n",
            mode.omega, mode.n_max, mode.nuclear_projection
        ));
        for p in 0..mode.coupling.nrows() {
            for q in p..mode.coupling.ncols() {
                let v = mode.coupling[(p, q)];
                if v != 0.0 {
                    out.push_str(&format!("{} {} {}\n", p + 1, q + 1, v));
                }
            }
        }
    }
    out
}
