use crate::error::LocalizerError;
use crate::music::Spectrum2D;
use crate::pipeline::Estimate;
use crate::Result;

/// Picks the `k` largest strict local maxima (8-neighborhood) of the
/// spectrum, falling back to the largest unreturned cells when fewer maxima
/// exist. Sources whose range lands on the final axis cell are flagged
/// far-field. Deterministic: ties order by value, then row-major index.
pub fn find_peaks_2d(spectrum: &Spectrum2D, k: usize, method: &str) -> Result<Estimate> {
    if k == 0 {
        return Err(LocalizerError::Domain("need at least one peak".into()));
    }
    let (na, nr) = spectrum.values.dim();
    if k > na * nr {
        return Err(LocalizerError::Domain(format!(
            "asked for {k} peaks from a {na}x{nr} grid"
        )));
    }

    let mut maxima: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..na {
        for j in 0..nr {
            let v = spectrum.values[(i, j)];
            let mut is_peak = true;
            'scan: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= na as i64 || nj >= nr as i64 {
                        continue;
                    }
                    if spectrum.values[(ni as usize, nj as usize)] >= v {
                        is_peak = false;
                        break 'scan;
                    }
                }
            }
            if is_peak {
                maxima.push((v, i, j));
            }
        }
    }
    sort_cells(&mut maxima);
    let mut chosen: Vec<(f64, usize, usize)> = maxima.into_iter().take(k).collect();

    if chosen.len() < k {
        let mut rest: Vec<(f64, usize, usize)> = Vec::with_capacity(na * nr);
        for i in 0..na {
            for j in 0..nr {
                if !chosen.iter().any(|&(_, ci, cj)| ci == i && cj == j) {
                    rest.push((spectrum.values[(i, j)], i, j));
                }
            }
        }
        sort_cells(&mut rest);
        chosen.extend(rest.into_iter().take(k - chosen.len()));
        sort_cells(&mut chosen);
    }

    let last_range = nr - 1;
    let mut angles = Vec::with_capacity(k);
    let mut ranges = Vec::with_capacity(k);
    let mut far_field = Vec::with_capacity(k);
    for &(_, i, j) in &chosen {
        angles.push(spectrum.grid.angles()[i]);
        ranges.push(spectrum.grid.ranges()[j]);
        far_field.push(j == last_range);
    }
    Ok(Estimate {
        num_sources: k,
        angles_rad: angles,
        ranges_m: ranges,
        far_field,
        method: method.to_string(),
        rule: None,
    })
}

/// Descending by value, ascending row-major index on ties.
fn sort_cells(cells: &mut [(f64, usize, usize)]) {
    cells.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SearchGrid;
    use ndarray::Array2;

    fn grid_6x5() -> SearchGrid {
        SearchGrid::new(
            (0..6).map(|i| i as f64 * 0.1).collect(),
            (0..5).map(|i| 10.0 + i as f64).collect(),
        )
        .unwrap()
    }

    fn bump(values: &mut Array2<f64>, ci: usize, cj: usize, amp: f64) {
        let (na, nr) = values.dim();
        for i in 0..na {
            for j in 0..nr {
                let d2 = (i as f64 - ci as f64).powi(2) + (j as f64 - cj as f64).powi(2);
                values[(i, j)] += amp * (-d2 / 2.0).exp();
            }
        }
    }

    #[test]
    fn single_bump_apex() {
        let grid = grid_6x5();
        let mut values = Array2::zeros((6, 5));
        bump(&mut values, 3, 2, 1.0);
        let est = find_peaks_2d(&Spectrum2D { values, grid: grid.clone() }, 1, "test").unwrap();
        assert_eq!(est.angles_rad, vec![grid.angles()[3]]);
        assert_eq!(est.ranges_m, vec![grid.ranges()[2]]);
        assert_eq!(est.far_field, vec![false]);
    }

    #[test]
    fn two_bumps_ordered_by_value() {
        let grid = grid_6x5();
        let mut values = Array2::zeros((6, 5));
        bump(&mut values, 1, 1, 0.8);
        bump(&mut values, 4, 3, 1.0);
        let est = find_peaks_2d(&Spectrum2D { values, grid: grid.clone() }, 2, "test").unwrap();
        assert_eq!(est.angles_rad[0], grid.angles()[4]);
        assert_eq!(est.ranges_m[0], grid.ranges()[3]);
        assert_eq!(est.angles_rad[1], grid.angles()[1]);
        assert_eq!(est.ranges_m[1], grid.ranges()[1]);
    }

    #[test]
    fn plateau_breaks_ties_to_first_cell() {
        // constant spectrum has no strict maxima; fallback picks row-major
        // first cell
        let grid = grid_6x5();
        let values = Array2::from_elem((6, 5), 2.5);
        let est = find_peaks_2d(&Spectrum2D { values, grid: grid.clone() }, 1, "test").unwrap();
        assert_eq!(est.angles_rad, vec![grid.angles()[0]]);
        assert_eq!(est.ranges_m, vec![grid.ranges()[0]]);
    }

    #[test]
    fn far_field_flag_on_edge_cell() {
        let grid = grid_6x5();
        let mut values = Array2::zeros((6, 5));
        bump(&mut values, 2, 4, 1.0);
        let est = find_peaks_2d(&Spectrum2D { values, grid }, 1, "test").unwrap();
        assert_eq!(est.far_field, vec![true]);
    }

    #[test]
    fn too_many_peaks_rejected() {
        let grid = grid_6x5();
        let values = Array2::zeros((6, 5));
        assert!(find_peaks_2d(&Spectrum2D { values, grid }, 31, "test").is_err());
    }

    #[test]
    fn deterministic_given_spectrum() {
        let grid = grid_6x5();
        let mut values = Array2::zeros((6, 5));
        bump(&mut values, 1, 2, 1.0);
        bump(&mut values, 4, 1, 1.0); // exact tie in amplitude
        let s = Spectrum2D { values, grid };
        let a = find_peaks_2d(&s, 2, "t").unwrap();
        let b = find_peaks_2d(&s, 2, "t").unwrap();
        assert_eq!(a.angles_rad, b.angles_rad);
        assert_eq!(a.ranges_m, b.ranges_m);
    }
}
