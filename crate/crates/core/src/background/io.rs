//! Tabulated background files: a sphere-format header with the λ-grid and
//! gauge flag, followed by one block of nodal rows per λ-level.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use super::{BackgroundFoliation, Interpolation, LambdaGrid, Slice};
use crate::error::{Error, Result};
use crate::field::{CovectorField, MetricField, ScalarField, SymTensor2Field};
use crate::snapshot::{content_lines, parse_token, read_rows, write_row, Header};

pub const BACKGROUND_FORMAT: &str = "nullflow-background";

const K_SIDE: [&str; 12] = [
    "gamma_tt", "gamma_tp", "gamma_pp", "tr_chib", "chib_hat_tt", "chib_hat_tp", "chib_hat_pp",
    "kappa", "g_ll", "alphab_hat_tt", "alphab_hat_tp", "alphab_hat_pp",
];
const L_SIDE: [&str; 3] = ["tr_chi", "tau_theta", "tau_phi"];
const CHI_HAT: [&str; 3] = ["chi_hat_tt", "chi_hat_tp", "chi_hat_pp"];

fn columns(s: &Slice, node: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(18);
    row.extend(s.gamma.g_at(node));
    row.push(s.tr_chib.values()[node]);
    row.extend(s.chib_hat.at(node));
    row.push(s.kappa.values()[node]);
    row.push(s.g_ll.values()[node]);
    row.extend(s.alphab_hat.at(node));
    if let (Some(tr), Some(tau)) = (&s.tr_chi, &s.tau) {
        row.push(tr.values()[node]);
        row.extend(tau.at(node));
    }
    if let Some(h) = &s.chi_hat {
        row.extend(h.at(node));
    }
    row
}

pub fn background_to_text(bg: &BackgroundFoliation) -> String {
    let mut fields: Vec<String> = K_SIDE.iter().map(|s| s.to_string()).collect();
    if bg.has_l_side() {
        fields.extend(L_SIDE.iter().map(|s| s.to_string()));
        if bg.has_chi_tensor() {
            fields.extend(CHI_HAT.iter().map(|s| s.to_string()));
        }
    }
    let l = bg.lambda();
    let header = Header {
        format: BACKGROUND_FORMAT.to_owned(),
        grid: *bg.grid(),
        entries: vec![
            ("lambda_min".into(), format!("{:e}", l.min)),
            ("lambda_step".into(), format!("{:e}", l.step)),
            ("lambda_count".into(), l.count.to_string()),
            ("gauge".into(), if bg.is_affine() { "affine" } else { "general" }.into()),
        ],
        fields,
    };
    let mut out = String::new();
    header.write(&mut out);
    for (k, s) in bg.slices().iter().enumerate() {
        out.push_str(&format!("lambda {k} {:e}\n", l.value(k)));
        for node in 0..bg.grid().len() {
            write_row(&mut out, columns(s, node));
        }
    }
    out
}

pub fn write_background(bg: &BackgroundFoliation, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, background_to_text(bg))?;
    Ok(())
}

pub fn background_from_reader(reader: impl std::io::BufRead) -> Result<BackgroundFoliation> {
    let mut lines = content_lines(reader);
    let header = Header::read(&mut lines, BACKGROUND_FORMAT)?;
    let grid = header.grid;
    let lambda = LambdaGrid::new(
        header.require("lambda_min")?,
        header.require("lambda_step")?,
        header.require("lambda_count")?,
    )?;
    let affine = match header.entry("gauge") {
        Some("affine") => true,
        Some("general") => false,
        other => return Err(Error::Parse(format!("invalid gauge flag {other:?}"))),
    };

    let names: Vec<&str> = header.fields.iter().map(String::as_str).collect();
    let with_l: Vec<&str> = K_SIDE.iter().chain(&L_SIDE).copied().collect();
    let with_chi: Vec<&str> = with_l.iter().chain(&CHI_HAT).copied().collect();
    let (has_l, has_chi) = if names == K_SIDE {
        (false, false)
    } else if names == with_l {
        (true, false)
    } else if names == with_chi {
        (true, true)
    } else {
        return Err(Error::Parse(format!("unsupported field list: {}", names.join(" "))));
    };

    let mut slices = Vec::with_capacity(lambda.count);
    for k in 0..lambda.count {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing block for lambda level {k}")))??;
        let mut it = line.split_whitespace();
        if it.next() != Some("lambda") || parse_token::<usize>(it.next(), ln, "level")? != k {
            return Err(Error::Parse(format!("line {ln}: expected 'lambda {k} <value>'")));
        }
        let value: f64 = parse_token(it.next(), ln, "lambda value")?;
        if (value - lambda.value(k)).abs() > 1e-9 * lambda.step {
            return Err(Error::Lattice(format!(
                "block {k} is at lambda = {value}, grid expects {}",
                lambda.value(k)
            )));
        }
        let mut c = read_rows(&mut lines, grid.len(), names.len())?.into_iter();
        let mut take = || c.next().expect("column count checked");
        let gamma = MetricField::new(SymTensor2Field::new(grid, take(), take(), take())?)?;
        let tr_chib = ScalarField::new(grid, take())?;
        let chib_hat = SymTensor2Field::new(grid, take(), take(), take())?;
        let kappa = ScalarField::new(grid, take())?;
        let g_ll = ScalarField::new(grid, take())?;
        let alphab_hat = SymTensor2Field::new(grid, take(), take(), take())?;
        let (tr_chi, tau) = if has_l {
            (
                Some(ScalarField::new(grid, take())?),
                Some(CovectorField::new(grid, take(), take())?),
            )
        } else {
            (None, None)
        };
        let chi_hat = if has_chi {
            Some(SymTensor2Field::new(grid, take(), take(), take())?)
        } else {
            None
        };
        slices.push(Slice {
            gamma,
            tr_chi,
            tau,
            chi_hat,
            tr_chib,
            chib_hat,
            kappa,
            g_ll,
            alphab_hat,
        });
    }
    if let Some(extra) = lines.next() {
        let (ln, _) = extra?;
        return Err(Error::Parse(format!("line {ln}: unexpected trailing data")));
    }
    Ok(BackgroundFoliation::new(lambda, affine, slices)?.with_interpolation(Interpolation::Cubic))
}

pub fn read_background(path: impl AsRef<Path>) -> Result<BackgroundFoliation> {
    background_from_reader(BufReader::new(fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{build_analytic, AnalyticBackground};
    use crate::grid::SphereGrid;

    #[test]
    fn tabulated_round_trip() {
        let grid = SphereGrid::full(4, 4).unwrap();
        let l = LambdaGrid::new(0.0, 0.1, 5).unwrap();
        let bg = build_analytic(
            &AnalyticBackground::SchwarzschildCone { mass: 0.7, r0: 1.3 },
            grid,
            l,
        )
        .unwrap();
        let text = background_to_text(&bg);
        let back = background_from_reader(text.as_bytes()).unwrap();
        assert_eq!(back, bg);
    }

    #[test]
    fn wrong_level_is_rejected() {
        let grid = SphereGrid::axisymmetric(4).unwrap();
        let l = LambdaGrid::new(0.0, 0.1, 4).unwrap();
        let bg = build_analytic(&AnalyticBackground::MinkowskiCone { r0: 1.0 }, grid, l).unwrap();
        let text = background_to_text(&bg).replace("lambda 2 ", "lambda 3 ");
        assert!(background_from_reader(text.as_bytes()).is_err());
    }
}
