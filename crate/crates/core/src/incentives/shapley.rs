//! Exact Shapley values for small 0/1 coalition games.

use std::collections::BTreeSet;

use crate::data_layer::StatementId;
use crate::ledger::{AccountId, TokenAmount};
use crate::proof_dag::Justification;
use crate::split::largest_remainder;

use super::IncentiveError;

/// Largest coalition evaluated exactly.
pub const MAX_PLAYERS: usize = 12;

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Shapley values of the game `v` on `n` players, as numerators over `n!`.
///
/// Coalitions are bitmasks; `v(mask)` says whether the coalition wins. Uses
/// the subset formula: player `i` gains `|S|! (n-|S|-1)!` for every `S`
/// without `i` that `i` turns from losing to winning, and loses the same when
/// it turns a winning `S` into a losing one.
pub fn shapley_numerators(n: usize, v: impl Fn(u32) -> bool) -> Vec<i128> {
    assert!(n <= 20, "exact enumeration limited to 20 players");
    let fact: Vec<i128> = (0..=n).map(|k| factorial(k) as i128).collect();
    let wins: Vec<bool> = (0..1u32 << n).map(&v).collect();
    let mut phi = vec![0i128; n];
    for mask in 0..1u32 << n {
        let size = mask.count_ones() as usize;
        if size == n {
            continue;
        }
        let weight = fact[size] * fact[n - size - 1];
        for (i, p) in phi.iter_mut().enumerate() {
            if mask & (1 << i) != 0 {
                continue;
            }
            match (wins[mask as usize], wins[(mask | 1 << i) as usize]) {
                (false, true) => *p += weight,
                (true, false) => *p -= weight,
                _ => {}
            }
        }
    }
    phi
}

/// Scales exact numerators to `amount` tokens. Numerators must be
/// non-negative, which holds for every monotone game.
pub fn integerize(
    amount: TokenAmount,
    numerators: &[i128],
) -> Result<Vec<TokenAmount>, IncentiveError> {
    let weights = numerators
        .iter()
        .map(|&x| u128::try_from(x).map_err(|_| IncentiveError::NonMonotoneGame))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(largest_remainder(amount, &weights)?)
}

/// Whether `target` follows from `justifications` by forward chaining, with
/// `True` as the only axiom.
pub fn provable<'a>(
    justifications: impl IntoIterator<Item = &'a Justification>,
    target: &StatementId,
) -> bool {
    let justs: Vec<&Justification> = justifications.into_iter().collect();
    let mut proven = BTreeSet::from([StatementId::truth()]);
    loop {
        let before = proven.len();
        for j in &justs {
            if !proven.contains(&j.target) && j.premises.iter().all(|p| proven.contains(p)) {
                proven.insert(j.target.clone());
            }
        }
        if proven.contains(target) {
            return true;
        }
        if proven.len() == before {
            return false;
        }
    }
}

/// Splits `amount` among the authors of `justifications` by Shapley value in
/// the game where a coalition wins iff its own justifications prove
/// `target`.
///
/// Players are ordered by their earliest justification, which is also the
/// tie-break order for remainder units.
pub fn shapley_allocate(
    justifications: &[&Justification],
    target: &StatementId,
    amount: TokenAmount,
) -> Result<Vec<(AccountId, TokenAmount)>, IncentiveError> {
    let mut sorted: Vec<&Justification> = justifications.to_vec();
    sorted.sort_by_key(|j| j.seq);
    let mut players: Vec<AccountId> = Vec::new();
    for j in &sorted {
        if !players.contains(&j.author) {
            players.push(j.author.clone());
        }
    }
    if players.len() > MAX_PLAYERS {
        return Err(IncentiveError::TooManyPlayers(players.len()));
    }
    let owner: Vec<usize> = sorted
        .iter()
        .map(|j| {
            players
                .iter()
                .position(|p| *p == j.author)
                .expect("collected")
        })
        .collect();
    let v = |mask: u32| {
        provable(
            sorted
                .iter()
                .zip(&owner)
                .filter(|(_, &o)| mask & (1 << o) != 0)
                .map(|(j, _)| *j),
            target,
        )
    };
    let full = (1u32 << players.len()) - 1;
    if !v(full) {
        return Err(IncentiveError::TargetUnprovenByGrandCoalition(
            target.clone(),
        ));
    }
    let shares = integerize(amount, &shapley_numerators(players.len(), v))?;
    Ok(players.into_iter().zip(shares).collect())
}
