//! Pairing fitted topics with reference topics.

use crate::error::{Error, Result};
use crate::issues::cosine;

/// Pairwise cosine similarity between two sets of equal-length vectors.
pub fn cosine_similarity_matrix(left: &[Vec<f64>], right: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    left.iter()
        .map(|a| right.iter().map(|b| cosine(a, b)).collect())
        .collect()
}

/// Assignment maximizing total similarity. `similarity[i][j]` scores row
/// `i` against column `j`; the result maps each row to a distinct column.
/// Exact dynamic programme over column subsets, so columns are capped at 20.
pub fn match_topics(similarity: &[Vec<f64>]) -> Result<Vec<usize>> {
    let rows = similarity.len();
    let cols = similarity.first().map_or(0, Vec::len);
    if similarity.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension("ragged similarity matrix".into()));
    }
    if rows > cols {
        return Err(Error::Dimension(format!("{rows} rows cannot match {cols} columns")));
    }
    if cols > 20 {
        return Err(Error::Validation("at most 20 columns supported".into()));
    }
    let full = 1usize << cols;
    // best[mask]: best score assigning the first popcount(mask) rows to `mask`.
    let mut best = vec![f64::NEG_INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    best[0] = 0.0;
    for mask in 0..full {
        let row = mask.count_ones() as usize;
        if row >= rows || best[mask] == f64::NEG_INFINITY {
            continue;
        }
        for (col, &s) in similarity[row].iter().enumerate() {
            if mask & (1 << col) != 0 {
                continue;
            }
            let next = mask | (1 << col);
            let score = best[mask] + s;
            if score > best[next] {
                best[next] = score;
                choice[next] = col;
            }
        }
    }
    let end = (0..full)
        .filter(|m| m.count_ones() as usize == rows)
        .max_by(|&a, &b| best[a].total_cmp(&best[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    let mut assignment = vec![0; rows];
    let mut mask = end;
    for row in (0..rows).rev() {
        let col = choice[mask];
        assignment[row] = col;
        mask &= !(1 << col);
    }
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beats_greedy() {
        // greedy would take (0,0)=0.9 and then be forced into (1,1)=0.0
        let sim = vec![vec![0.9, 0.8], vec![0.85, 0.0]];
        assert_eq!(match_topics(&sim).unwrap(), vec![1, 0]);
    }

    #[test]
    fn rectangular() {
        let sim = vec![vec![0.1, 0.2, 0.9]];
        assert_eq!(match_topics(&sim).unwrap(), vec![2]);
        assert!(match_topics(&[vec![1.0], vec![1.0]]).is_err());
    }
}
