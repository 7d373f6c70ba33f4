use std::fmt;
use std::str::FromStr;

/// Orders of a seasonal ARIMA model `(p,d,q)x(P,D,Q)s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SarimaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal_p: usize,
    pub seasonal_d: usize,
    pub seasonal_q: usize,
    pub period: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("cannot parse `{0}`; expected (p,d,q)x(P,D,Q)s")]
    Syntax(String),
    #[error("seasonal period must be at least 1")]
    Period,
    #[error("total differencing d + D = {0} exceeds 2")]
    Differencing(usize),
}

impl SarimaSpec {
    pub const fn new(
        (p, d, q): (usize, usize, usize),
        (seasonal_p, seasonal_d, seasonal_q): (usize, usize, usize),
        period: usize,
    ) -> Self {
        SarimaSpec {
            p,
            d,
            q,
            seasonal_p,
            seasonal_d,
            seasonal_q,
            period,
        }
    }

    /// Default for prices and the mileage ratio.
    pub const PRICE: SarimaSpec = SarimaSpec::new((3, 0, 1), (1, 1, 1), 24);
    /// Default for the RegD up/down factors.
    pub const REGD: SarimaSpec = SarimaSpec::new((2, 0, 1), (1, 0, 1), 24);

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.period < 1 {
            return Err(SpecError::Period);
        }
        if self.d + self.seasonal_d > 2 {
            return Err(SpecError::Differencing(self.d + self.seasonal_d));
        }
        Ok(())
    }

    /// Whether every order lies in the reference grid p in {2,3}, d in {0,1},
    /// q in {0,1}, P = 1, D in {0,1}, Q in {0,1}, s = 24.
    pub fn within_reference_ranges(&self) -> bool {
        (2..=3).contains(&self.p)
            && self.d <= 1
            && self.q <= 1
            && self.seasonal_p == 1
            && self.seasonal_d <= 1
            && self.seasonal_q <= 1
            && self.period == 24
    }

    /// Observations consumed by differencing.
    pub fn differencing_loss(&self) -> usize {
        self.d + self.seasonal_d * self.period
    }

    pub fn num_coefficients(&self) -> usize {
        self.p + self.q + self.seasonal_p + self.seasonal_q
    }

    /// Shortest series `fit_sarima` accepts.
    pub fn min_fit_length(&self) -> usize {
        10 * (self.num_coefficients() + 1) + self.differencing_loss()
    }
}

impl fmt::Display for SarimaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{})x({},{},{}){}",
            self.p, self.d, self.q, self.seasonal_p, self.seasonal_d, self.seasonal_q, self.period
        )
    }
}

impl FromStr for SarimaSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SpecError::Syntax(s.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (left, right) = compact.split_once(")x(").ok_or_else(bad)?;
        let left = left.strip_prefix('(').ok_or_else(bad)?;
        let (seasonal, period) = right.split_once(')').ok_or_else(bad)?;
        let triple = |t: &str| -> Result<(usize, usize, usize), SpecError> {
            let parts: Vec<usize> = t
                .split(',')
                .map(|x| x.parse().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            match parts.as_slice() {
                [a, b, c] => Ok((*a, *b, *c)),
                _ => Err(bad()),
            }
        };
        let spec = SarimaSpec::new(
            triple(left)?,
            triple(seasonal)?,
            period.parse().map_err(|_| bad())?,
        );
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let spec: SarimaSpec = "(3,0,1)x(1,1,1)24".parse().unwrap();
        assert_eq!(spec, SarimaSpec::PRICE);
        assert_eq!(spec.to_string(), "(3,0,1)x(1,1,1)24");
        assert_eq!(" (2, 0, 1) x (1, 0, 1) 24".parse::<SarimaSpec>().unwrap(), SarimaSpec::REGD);
        assert!(SarimaSpec::PRICE.within_reference_ranges());
        assert!(SarimaSpec::REGD.within_reference_ranges());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!("(1,0,0)".parse::<SarimaSpec>(), Err(SpecError::Syntax(_))));
        assert!(matches!("(1,2,0)x(0,1,0)24".parse::<SarimaSpec>(), Err(SpecError::Differencing(3))));
        assert!(matches!("(1,0,0)x(0,0,0)0".parse::<SarimaSpec>(), Err(SpecError::Period)));
    }
}
