use super::{FrechetPanel, SpatialLayout};
use crate::error::{Error, Result};
use crate::types::{SummaryKind, SummaryStatistic};

fn check_sites(panel: &FrechetPanel, idx: &[usize]) -> Result<()> {
    let d = panel.sites();
    for (a, &i) in idx.iter().enumerate() {
        if i >= d {
            return Err(Error::InvalidConfig(format!("site {i} out of range for {d} sites")));
        }
        if idx[..a].contains(&i) {
            return Err(Error::InvalidConfig(format!("site {i} repeated")));
        }
    }
    Ok(())
}

fn naive_coefficient(panel: &FrechetPanel, idx: &[usize]) -> Result<f64> {
    check_sites(panel, idx)?;
    let mut sum = 0.0;
    for row in panel.rows() {
        let m = idx.iter().map(|&i| row[i]).fold(f64::NEG_INFINITY, f64::max);
        if !(m > 0.0) {
            return Err(Error::OutsideSupport(format!("non-positive panel maximum {m}")));
        }
        sum += 1.0 / m;
    }
    Ok(panel.replicates() as f64 / sum)
}

/// `T / Σ_t 1/max(z_t(x_i), z_t(x_j), z_t(x_k))`; 1 under complete
/// dependence, 3 under independence.
pub fn extremal_coeff_triplet(panel: &FrechetPanel, i: usize, j: usize, k: usize) -> Result<f64> {
    naive_coefficient(panel, &[i, j, k])
}

/// Pairwise analogue of [`extremal_coeff_triplet`], in `[1, 2]`.
pub fn extremal_coeff_pair(panel: &FrechetPanel, i: usize, j: usize) -> Result<f64> {
    naive_coefficient(panel, &[i, j])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pub sites: [usize; 3],
    /// Side lengths, ascending.
    pub sides: [f64; 3],
}

impl Triangle {
    pub fn perimeter(&self) -> f64 {
        self.sides.iter().sum()
    }

    fn shape_key(&self) -> [i64; 3] {
        self.sides.map(|s| (s * 1e9).round() as i64)
    }
}

/// Partition of all site triangles into `K` groups of similar shape. Depends
/// only on the layout.
///
/// Congruent triangles form indivisible units, ordered by perimeter and then
/// by their ascending side lengths. Units are split, largest first, only
/// when there are fewer units than groups. The ordered units are then cut
/// into `K` contiguous groups whose sizes are as equal as possible.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleGrouping {
    groups: Vec<Vec<Triangle>>,
}

impl TriangleGrouping {
    pub fn new(layout: &SpatialLayout, k: usize) -> Result<Self> {
        let d = layout.sites();
        let mut tris = Vec::new();
        for a in 0..d {
            for b in a + 1..d {
                for c in b + 1..d {
                    let mut sides = [layout.distance(a, b), layout.distance(a, c), layout.distance(b, c)];
                    sides.sort_by(f64::total_cmp);
                    tris.push(Triangle { sites: [a, b, c], sides });
                }
            }
        }
        if k < 1 {
            return Err(Error::InvalidConfig("at least one group is required".into()));
        }
        if k > tris.len() {
            return Err(Error::InvalidConfig(format!("{k} groups requested but only {} triangles", tris.len())));
        }
        // Congruence classes by side lengths quantised to 1e-9, then classes
        // ordered by (perimeter, sides) of their first member.
        tris.sort_by_key(|t| (t.shape_key(), t.sites));
        let mut units: Vec<Vec<Triangle>> = Vec::new();
        for t in tris {
            match units.last_mut() {
                Some(u) if u[0].shape_key() == t.shape_key() => u.push(t),
                _ => units.push(vec![t]),
            }
        }
        units.sort_by(|x, y| {
            let (x, y) = (&x[0], &y[0]);
            x.perimeter()
                .total_cmp(&y.perimeter())
                .then_with(|| x.sides[0].total_cmp(&y.sides[0]))
                .then_with(|| x.sides[1].total_cmp(&y.sides[1]))
                .then_with(|| x.sides[2].total_cmp(&y.sides[2]))
        });
        while units.len() < k {
            let (big, _) = units.iter().enumerate().max_by_key(|(i, u)| (u.len(), std::cmp::Reverse(*i))).unwrap();
            let half = units[big].len() / 2;
            let tail = units[big].split_off(half);
            units.insert(big + 1, tail);
        }
        let sizes: Vec<usize> = units.iter().map(Vec::len).collect();
        let cuts = balanced_cuts(&sizes, k);
        let mut groups = Vec::with_capacity(k);
        let mut iter = units.into_iter();
        let mut prev = 0;
        for cut in cuts {
            groups.push(iter.by_ref().take(cut - prev).flatten().collect());
            prev = cut;
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Vec<Triangle>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Site triples of each group, for comparing partitions.
    pub fn partition(&self) -> Vec<Vec<[usize; 3]>> {
        self.groups.iter().map(|g| g.iter().map(|t| t.sites).collect()).collect()
    }
}

/// Contiguous cut of the unit sizes into `k` non-empty groups minimising the
/// squared deviation of group sizes from the mean. Returns cumulative unit
/// counts at each group end.
fn balanced_cuts(sizes: &[usize], k: usize) -> Vec<usize> {
    let n = sizes.len();
    let total: usize = sizes.iter().sum();
    let target = total as f64 / k as f64;
    let mut prefix = vec![0usize; n + 1];
    for (i, s) in sizes.iter().enumerate() {
        prefix[i + 1] = prefix[i] + s;
    }
    let cost = |a: usize, b: usize| {
        let s = (prefix[b] - prefix[a]) as f64 - target;
        s * s
    };
    // best[g][i]: first i units split into g groups.
    let mut best = vec![vec![f64::INFINITY; n + 1]; k + 1];
    let mut arg = vec![vec![0usize; n + 1]; k + 1];
    best[0][0] = 0.0;
    for g in 1..=k {
        for i in g..=n - (k - g) {
            for j in (g - 1)..i {
                let c = best[g - 1][j] + cost(j, i);
                if c < best[g][i] {
                    best[g][i] = c;
                    arg[g][i] = j;
                }
            }
        }
    }
    let mut cuts = vec![0; k];
    let mut i = n;
    for g in (1..=k).rev() {
        cuts[g - 1] = i;
        i = arg[g][i];
    }
    cuts
}

/// Means of the tripletwise extremal coefficients within each group.
pub fn ec_group_summary(panel: &FrechetPanel, grouping: &TriangleGrouping) -> Result<SummaryStatistic> {
    let means = grouping
        .groups()
        .iter()
        .map(|g| {
            let mut s = 0.0;
            for t in g {
                s += extremal_coeff_triplet(panel, t.sites[0], t.sites[1], t.sites[2])?;
            }
            Ok(s / g.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    SummaryStatistic::new(means, SummaryKind::ExtremalGroups)
}
