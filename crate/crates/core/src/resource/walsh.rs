use std::collections::BTreeMap;

use super::ResourceError;
use crate::ids::EntityId;

/// Sylvester-Hadamard matrix of +1/-1 chips. Row `i` is Walsh code `i` in
/// natural (Hadamard) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalshMatrix {
    rows: Vec<Vec<i8>>,
}

impl WalshMatrix {
    pub fn order(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> Option<&[i8]> {
        self.rows.get(i).map(Vec::as_slice)
    }

    pub fn rows(&self) -> &[Vec<i8>] {
        &self.rows
    }
}

pub fn walsh_matrix(order: usize) -> Result<WalshMatrix, ResourceError> {
    if order == 0 || !order.is_power_of_two() {
        return Err(ResourceError::NotPowerOfTwo(order));
    }
    let mut rows = vec![vec![1i8]];
    while rows.len() < order {
        let n = rows.len();
        let mut next = Vec::with_capacity(2 * n);
        for r in &rows {
            next.push(r.iter().chain(r.iter()).copied().collect());
        }
        for r in &rows {
            next.push(r.iter().copied().chain(r.iter().map(|c| -c)).collect());
        }
        debug_assert_eq!(next.len(), 2 * n);
        rows = next;
    }
    Ok(WalshMatrix { rows })
}

/// Inner product of two chip sequences.
pub fn inner_product(a: &[i8], b: &[i8]) -> i64 {
    a.iter().zip(b).map(|(&x, &y)| i64::from(x) * i64::from(y)).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeAssignment {
    matrix: WalshMatrix,
    rows: BTreeMap<EntityId, usize>,
}

impl CodeAssignment {
    pub fn order(&self) -> usize {
        self.matrix.order()
    }

    pub fn row_of(&self, e: EntityId) -> Option<usize> {
        self.rows.get(&e).copied()
    }

    pub fn code_of(&self, e: EntityId) -> Option<&[i8]> {
        self.row_of(e).and_then(|r| self.matrix.row(r))
    }

    pub fn entries(&self) -> impl Iterator<Item = (EntityId, usize)> + '_ {
        self.rows.iter().map(|(e, r)| (*e, *r))
    }

    pub fn matrix(&self) -> &WalshMatrix {
        &self.matrix
    }
}

/// Gives each entity its own Walsh row in ascending id order. Row 0 (all
/// ones) is skipped unless every row is needed.
pub fn assign_codes(
    entities: impl IntoIterator<Item = EntityId>,
    order: usize,
) -> Result<CodeAssignment, ResourceError> {
    let matrix = walsh_matrix(order)?;
    let mut ids: Vec<EntityId> = entities.into_iter().collect();
    ids.sort();
    ids.dedup();
    if ids.len() > order {
        return Err(ResourceError::CodeCapacity {
            needed: ids.len(),
            order,
        });
    }
    let first = usize::from(ids.len() < order);
    let rows = ids
        .into_iter()
        .enumerate()
        .map(|(i, e)| (e, first + i))
        .collect();
    Ok(CodeAssignment { matrix, rows })
}

/// Smallest Walsh order that fits `n` entities while leaving row 0 unused.
pub fn order_for(n: usize) -> usize {
    (n + 1).next_power_of_two()
}

/// Chip-synchronous sum of each entity's symbol times its code.
pub fn spread(
    symbols: &BTreeMap<EntityId, i32>,
    assignment: &CodeAssignment,
) -> Result<Vec<i32>, ResourceError> {
    let mut composite = vec![0i32; assignment.order()];
    for (&e, &sym) in symbols {
        let code = assignment
            .code_of(e)
            .ok_or(ResourceError::UnknownCode(e))?;
        for (c, &chip) in composite.iter_mut().zip(code) {
            *c += sym * i32::from(chip);
        }
    }
    Ok(composite)
}

/// Correlates a composite with Walsh row `row`, normalized by the order.
pub fn correlate(composite: &[i32], matrix: &WalshMatrix, row: usize) -> Result<i32, ResourceError> {
    let code = matrix.row(row).ok_or(ResourceError::UnknownRow(row))?;
    if composite.len() != code.len() {
        return Err(ResourceError::ChipLength {
            expected: code.len(),
            got: composite.len(),
        });
    }
    let sum: i64 = composite
        .iter()
        .zip(code)
        .map(|(&c, &chip)| i64::from(c) * i64::from(chip))
        .sum();
    Ok((sum / code.len() as i64) as i32)
}

/// Recovers every assigned entity's symbol from a composite.
pub fn cdma_despread(
    composite: &[i32],
    assignment: &CodeAssignment,
) -> Result<BTreeMap<EntityId, i32>, ResourceError> {
    assignment
        .entries()
        .map(|(e, row)| Ok((e, correlate(composite, assignment.matrix(), row)?)))
        .collect()
}
