//! Exact satisfiability of conjunctions of linear integer constraints by
//! the Omega test: equality elimination with the symmetric-modulo step,
//! exact/dark/grey shadows for inequalities, and model reconstruction on the
//! way back out of the recursion.

use std::collections::BTreeMap;


use super::scalar::{add, div_ceil, mul, neg, sub, Scalar};
use super::ArithError;

/// `Σ coef[i]·x_i + constant`, read as `= 0` or `≥ 0` by context.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Row<T> {
    pub coef: Vec<T>,
    pub constant: T,
}

impl<T: Scalar> Row<T> {
    fn eval_without(&self, model: &[T], skip: usize) -> Result<T, ArithError> {
        let mut acc = self.constant.clone();
        for (i, c) in self.coef.iter().enumerate() {
            if i != skip && !c.is_zero() {
                acc = add(&acc, &mul(c, &model[i])?)?;
            }
        }
        Ok(acc)
    }

    /// `self - factor·other`
    fn minus_scaled(&self, factor: &T, other: &Row<T>) -> Result<Row<T>, ArithError> {
        let coef = self
            .coef
            .iter()
            .zip(&other.coef)
            .map(|(a, b)| sub(a, &mul(factor, b)?))
            .collect::<Result<_, _>>()?;
        Ok(Row { coef, constant: sub(&self.constant, &mul(factor, &other.constant)?)? })
    }

    /// `p·self + q·other`
    fn combine(&self, p: &T, other: &Row<T>, q: &T) -> Result<Row<T>, ArithError> {
        let coef = self
            .coef
            .iter()
            .zip(&other.coef)
            .map(|(a, b)| add(&mul(p, a)?, &mul(q, b)?))
            .collect::<Result<_, _>>()?;
        Ok(Row { coef, constant: add(&mul(p, &self.constant)?, &mul(q, &other.constant)?)? })
    }

    fn gcd(&self) -> T {
        self.coef.iter().fold(T::zero(), |g, c| g.gcd(c))
    }
}

enum Norm<T> {
    Trivial,
    False,
    Row(Row<T>),
}

fn normalize_eq<T: Scalar>(r: Row<T>) -> Norm<T> {
    let g = r.gcd();
    if g.is_zero() {
        return if r.constant.is_zero() { Norm::Trivial } else { Norm::False };
    }
    if !r.constant.mod_floor(&g).is_zero() {
        return Norm::False;
    }
    Norm::Row(Row {
        coef: r.coef.iter().map(|c| c.div_floor(&g)).collect(),
        constant: r.constant.div_floor(&g),
    })
}

fn normalize_geq<T: Scalar>(r: Row<T>) -> Norm<T> {
    let g = r.gcd();
    if g.is_zero() {
        return if r.constant.is_negative() { Norm::False } else { Norm::Trivial };
    }
    Norm::Row(Row {
        coef: r.coef.iter().map(|c| c.div_floor(&g)).collect(),
        constant: r.constant.div_floor(&g),
    })
}

/// `a mod^ m`: the representative of `a` modulo `m` in `(-m/2, m/2]`.
fn mod_hat<T: Scalar>(a: &T, m: &T) -> Result<T, ArithError> {
    let two = add(&T::one(), &T::one())?;
    let q = add(&mul(&two, a)?, m)?.div_floor(&mul(&two, m)?);
    sub(a, &mul(m, &q)?)
}

pub(crate) struct Omega {
    steps: usize,
    limit: usize,
}

enum Choice {
    Unbounded,
    Exact,
    Inexact,
}

impl Omega {
    pub fn new(limit: usize) -> Self {
        Omega { steps: 0, limit }
    }

    /// A model of `eqs (= 0) ∧ geqs (≥ 0)` over `n` variables, or `None`.
    pub fn solve<T: Scalar>(
        &mut self,
        eqs: Vec<Row<T>>,
        geqs: Vec<Row<T>>,
        n: usize,
    ) -> Result<Option<Vec<T>>, ArithError> {
        self.steps += 1;
        if self.steps > self.limit {
            return Err(ArithError::ResourceLimit);
        }
        let mut live_eqs = Vec::new();
        for e in eqs {
            match normalize_eq(e) {
                Norm::Trivial => {}
                Norm::False => return Ok(None),
                Norm::Row(r) => live_eqs.push(r),
            }
        }
        if !live_eqs.is_empty() {
            return self.eliminate_equality(live_eqs, geqs, n);
        }

        // tightest constant per coefficient vector
        let mut best: BTreeMap<Vec<T>, T> = BTreeMap::new();
        for g in geqs {
            match normalize_geq(g) {
                Norm::Trivial => {}
                Norm::False => return Ok(None),
                Norm::Row(r) => {
                    let slot = best.entry(r.coef).or_insert_with(|| r.constant.clone());
                    if r.constant < *slot {
                        *slot = r.constant;
                    }
                }
            }
        }
        let mut implied_eqs = Vec::new();
        for (coef, k) in &best {
            let opposite: Vec<T> = coef.iter().map(neg).collect::<Result<_, _>>()?;
            if let Some(k2) = best.get(&opposite) {
                let s = add(k, k2)?;
                if s.is_negative() {
                    return Ok(None);
                }
                if s.is_zero() && *coef > opposite {
                    implied_eqs.push(Row { coef: coef.clone(), constant: k.clone() });
                }
            }
        }
        let rows: Vec<Row<T>> =
            best.into_iter().map(|(coef, constant)| Row { coef, constant }).collect();
        if !implied_eqs.is_empty() {
            return self.solve(implied_eqs, rows, n);
        }
        if rows.is_empty() {
            return Ok(Some(vec![T::zero(); n]));
        }

        let (var, choice) = choose_variable(&rows, n);
        self.eliminate_variable(rows, n, var, choice)
    }

    fn eliminate_equality<T: Scalar>(
        &mut self,
        eqs: Vec<Row<T>>,
        geqs: Vec<Row<T>>,
        n: usize,
    ) -> Result<Option<Vec<T>>, ArithError> {
        // equation/variable pair with the smallest coefficient magnitude
        let mut pick = (0usize, 0usize);
        let mut best: Option<T> = None;
        for (ei, e) in eqs.iter().enumerate() {
            for (vi, c) in e.coef.iter().enumerate() {
                if !c.is_zero() && best.as_ref().is_none_or(|b| c.abs() < *b) {
                    best = Some(c.abs());
                    pick = (ei, vi);
                }
            }
        }
        let (ei, k) = pick;
        let a = eqs[ei].coef[k].clone();
        if a.abs().is_one() {
            let e = eqs[ei].clone();
            let subst = |r: &Row<T>| -> Result<Row<T>, ArithError> {
                if r.coef[k].is_zero() {
                    Ok(r.clone())
                } else {
                    r.minus_scaled(&mul(&r.coef[k], &a)?, &e)
                }
            };
            let rest_eqs = eqs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != ei)
                .map(|(_, r)| subst(r))
                .collect::<Result<Vec<_>, _>>()?;
            let rest_geqs = geqs.iter().map(subst).collect::<Result<Vec<_>, _>>()?;
            let Some(mut model) = self.solve(rest_eqs, rest_geqs, n)? else {
                return Ok(None);
            };
            // a·x_k + r = 0 with a = ±1  ⇒  x_k = -a·r
            model[k] = neg(&mul(&a, &e.eval_without(&model, k)?)?)?;
            return Ok(Some(model));
        }

        // symmetric-modulo step with a fresh variable σ at index n
        let m = add(&a.abs(), &T::one())?;
        let widen = |r: &Row<T>| {
            let mut coef = r.coef.clone();
            coef.push(T::zero());
            Row { coef, constant: r.constant.clone() }
        };
        let e = &eqs[ei];
        let mut coef = e.coef.iter().map(|c| mod_hat(c, &m)).collect::<Result<Vec<_>, _>>()?;
        coef.push(neg(&m)?);
        let sigma_eq = Row { coef, constant: mod_hat(&e.constant, &m)? };
        let unit = sigma_eq.coef[k].clone();
        debug_assert!(unit.abs().is_one());
        let subst = |r: Row<T>| -> Result<Row<T>, ArithError> {
            if r.coef[k].is_zero() {
                Ok(r)
            } else {
                r.minus_scaled(&mul(&r.coef[k], &unit)?, &sigma_eq)
            }
        };
        let new_eqs =
            eqs.iter().map(|r| subst(widen(r))).collect::<Result<Vec<_>, _>>()?;
        let new_geqs = geqs.iter().map(|r| subst(widen(r))).collect::<Result<Vec<_>, _>>()?;
        let Some(mut model) = self.solve(new_eqs, new_geqs, n + 1)? else {
            return Ok(None);
        };
        model[k] = neg(&mul(&unit, &sigma_eq.eval_without(&model, k)?)?)?;
        model.truncate(n);
        Ok(Some(model))
    }

    fn eliminate_variable<T: Scalar>(
        &mut self,
        rows: Vec<Row<T>>,
        n: usize,
        j: usize,
        choice: Choice,
    ) -> Result<Option<Vec<T>>, ArithError> {
        let (with, without): (Vec<Row<T>>, Vec<Row<T>>) =
            rows.iter().cloned().partition(|r| !r.coef[j].is_zero());
        let lowers: Vec<&Row<T>> = with.iter().filter(|r| r.coef[j].is_positive()).collect();
        let uppers: Vec<&Row<T>> = with.iter().filter(|r| r.coef[j].is_negative()).collect();

        let pick_value = |model: &mut Vec<T>| -> Result<(), ArithError> {
            let mut lo: Option<T> = None;
            for l in &lowers {
                // a·x + r ≥ 0  ⇒  x ≥ ⌈-r / a⌉
                let v = div_ceil(&neg(&l.eval_without(model, j)?)?, &l.coef[j])?;
                lo = Some(match lo {
                    Some(cur) if cur >= v => cur,
                    _ => v,
                });
            }
            let mut hi: Option<T> = None;
            for u in &uppers {
                // -b·x + r ≥ 0  ⇒  x ≤ ⌊r / b⌋
                let b = neg(&u.coef[j])?;
                let v = u.eval_without(model, j)?.div_floor(&b);
                hi = Some(match hi {
                    Some(cur) if cur <= v => cur,
                    _ => v,
                });
            }
            model[j] = match (lo, hi) {
                (Some(l), _) => l,
                (None, Some(h)) => h,
                (None, None) => T::zero(),
            };
            Ok(())
        };

        if let Choice::Unbounded = choice {
            let Some(mut model) = self.solve(Vec::new(), without, n)? else {
                return Ok(None);
            };
            pick_value(&mut model)?;
            return Ok(Some(model));
        }

        let mut real = without.clone();
        let mut dark = without.clone();
        for l in &lowers {
            for u in &uppers {
                let a = l.coef[j].clone();
                let b = neg(&u.coef[j])?;
                let row = l.combine(&b, u, &a)?;
                let slack = mul(&sub(&a, &T::one())?, &sub(&b, &T::one())?)?;
                dark.push(Row { coef: row.coef.clone(), constant: sub(&row.constant, &slack)? });
                real.push(row);
            }
        }

        if let Choice::Exact = choice {
            let Some(mut model) = self.solve(Vec::new(), real, n)? else {
                return Ok(None);
            };
            pick_value(&mut model)?;
            return Ok(Some(model));
        }

        if let Some(mut model) = self.solve(Vec::new(), dark, n)? {
            pick_value(&mut model)?;
            return Ok(Some(model));
        }
        if self.solve(Vec::new(), real, n)?.is_none() {
            return Ok(None);
        }
        // grey shadows
        let max_b = uppers.iter().map(|u| u.coef[j].abs()).max().expect("uppers non-empty");
        for l in &lowers {
            let a = l.coef[j].clone();
            let top = sub(&sub(&mul(&a, &max_b)?, &a)?, &max_b)?.div_floor(&max_b);
            let mut i = T::zero();
            while i <= top {
                let eq = Row { coef: l.coef.clone(), constant: sub(&l.constant, &i)? };
                if let Some(model) = self.solve(vec![eq], rows.clone(), n)? {
                    return Ok(Some(model));
                }
                i = add(&i, &T::one())?;
            }
        }
        Ok(None)
    }
}

fn choose_variable<T: Scalar>(rows: &[Row<T>], n: usize) -> (usize, Choice) {
    let mut best_exact: Option<(usize, usize)> = None;
    let mut best_inexact: Option<(usize, usize)> = None;
    for j in 0..n {
        let mut lowers = 0usize;
        let mut uppers = 0usize;
        let mut lower_unit = true;
        let mut upper_unit = true;
        for r in rows {
            let c = &r.coef[j];
            if c.is_positive() {
                lowers += 1;
                lower_unit &= c.is_one();
            } else if c.is_negative() {
                uppers += 1;
                upper_unit &= c.abs().is_one();
            }
        }
        if lowers + uppers == 0 {
            continue;
        }
        if lowers == 0 || uppers == 0 {
            return (j, Choice::Unbounded);
        }
        let score = lowers * uppers;
        let slot = if lower_unit || upper_unit { &mut best_exact } else { &mut best_inexact };
        if slot.is_none_or(|(_, s)| score < s) {
            *slot = Some((j, score));
        }
    }
    match (best_exact, best_inexact) {
        (Some((j, _)), _) => (j, Choice::Exact),
        (None, Some((j, _))) => (j, Choice::Inexact),
        (None, None) => unreachable!("normalized non-empty rows mention a variable"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coef: &[i64], k: i64) -> Row<i64> {
        Row { coef: coef.to_vec(), constant: k }
    }

    fn check(eqs: &[Row<i64>], geqs: &[Row<i64>], m: &[i64]) {
        for e in eqs {
            assert_eq!(e.eval_without(m, usize::MAX).unwrap(), 0, "{e:?} under {m:?}");
        }
        for g in geqs {
            assert!(g.eval_without(m, usize::MAX).unwrap() >= 0, "{g:?} under {m:?}");
        }
    }

    #[test]
    fn parity_clash_is_unsat() {
        // 2x - 2y = 1
        let eqs = vec![row(&[2, -2], -1)];
        assert_eq!(Omega::new(10_000).solve(eqs, vec![], 2).unwrap(), None);
    }

    #[test]
    fn unbounded_gap_without_integer_point() {
        // 1 ≤ 3x - 3y ≤ 2
        let geqs = vec![row(&[3, -3], -1), row(&[-3, 3], 2)];
        assert_eq!(Omega::new(10_000).solve(vec![], geqs, 2).unwrap(), None);
    }

    #[test]
    fn needs_grey_shadow() {
        // 27 ≤ 11x + 13y ≤ 45, -10 ≤ 7x - 9y ≤ 4 (Pugh's example): satisfiable?
        let geqs = vec![
            row(&[11, 13], -27),
            row(&[-11, -13], 45),
            row(&[7, -9], 10),
            row(&[-7, 9], 4),
        ];
        let mut brute = None;
        'outer: for x in -20..=20 {
            for y in -20..=20 {
                let m = [x, y];
                if geqs.iter().all(|g| g.eval_without(&m, usize::MAX).unwrap() >= 0) {
                    brute = Some(m);
                    break 'outer;
                }
            }
        }
        let got = Omega::new(10_000).solve(vec![], geqs.clone(), 2).unwrap();
        assert_eq!(got.is_some(), brute.is_some());
        if let Some(m) = got {
            check(&[], &geqs, &m);
        }
    }

    #[test]
    fn equality_with_large_coefficients() {
        // 7x + 12y + 31z = 17, 3x + 5y + 14z = 7, 1 ≤ x ≤ 40, -50 ≤ y ≤ 50
        let eqs = vec![row(&[7, 12, 31], -17), row(&[3, 5, 14], -7)];
        let geqs = vec![row(&[1, 0, 0], -1), row(&[-1, 0, 0], 40), row(&[0, 1, 0], 50), row(&[0, -1, 0], 50)];
        let m = Omega::new(10_000).solve(eqs.clone(), geqs.clone(), 3).unwrap().unwrap();
        check(&eqs, &geqs, &m);
    }
}
