//! Weather-driven severity regressions and their use as `α` forcings.
//!
//! Temperature `T`, leaf wetness `W` and humidity `H` are raw regression
//! inputs; the coefficients carry the units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::host::{Rate, TimeSeries};

/// `ASI = a0 + a01·W + a10·T + a11·T·W + a02·T² + a20·W²`
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AsiCoefficients {
    pub a0: f64,
    pub a01: f64,
    pub a10: f64,
    pub a11: f64,
    pub a02: f64,
    pub a20: f64,
}

pub fn eval_asi(c: &AsiCoefficients, t: f64, w: f64) -> f64 {
    c.a0 + c.a01 * w + c.a10 * t + c.a11 * t * w + c.a02 * t * t + c.a20 * w * w
}

/// `ln(p/(1−p)) = a0 + a01·H + a10·T + a02·H² + a20·T² + b·ln t`
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DoddCoefficients {
    pub a0: f64,
    pub a01: f64,
    pub a10: f64,
    pub a02: f64,
    pub a20: f64,
    pub b: f64,
}

pub fn dodd_logit(c: &DoddCoefficients, t: f64, h: f64, incubation: f64) -> Result<f64> {
    if !(incubation > 0.0) {
        return Err(Error::Domain(format!("incubation period must be positive, got {incubation}")));
    }
    Ok(c.a0 + c.a01 * h + c.a10 * t + c.a02 * h * h + c.a20 * t * t + c.b * incubation.ln())
}

/// Fraction of appressoria, in `(0, 1)`.
pub fn eval_dodd_fraction(c: &DoddCoefficients, t: f64, h: f64, incubation: f64) -> Result<f64> {
    let z = dodd_logit(c, t, h, incubation)?;
    Ok(if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DuthieForm {
    /// `R = f(T)[1 − exp(−[b(W − c)]^d)]`
    Form1,
    /// `R = a[1 − exp(−[f(T)(W − c)]^d)]`
    Form2,
}

/// Response-surface parameters. `t_mid` is the parameter written `f` in the
/// literature, renamed to avoid the clash with the function `f(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuthieCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    #[serde(rename = "f")]
    pub t_mid: f64,
    pub g: f64,
    pub h: f64,
    pub form: DuthieForm,
}

impl DuthieCoefficients {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("a", self.a > 0.0),
            ("b", self.b > 0.0),
            ("c", self.c >= 0.0),
            ("d", self.d > 0.0),
            ("e", self.e > 0.0),
            ("f", self.t_mid >= 0.0),
            ("g", self.g > 0.0),
            ("h", self.h > 0.0),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(Error::param(name, "violates the sign constraints of the response surface")),
            None => Ok(()),
        }
    }

    /// `f(T) = e(1+h) h^{h/(1+h)} exp(g[T−f]/(1+h)) / (1 + exp(g[T−f]))`
    pub fn temperature_factor(&self, t: f64) -> f64 {
        let x = self.g * (t - self.t_mid);
        let h = self.h;
        let scale = self.e * (1.0 + h) * h.powf(h / (1.0 + h));
        // exp(x/(1+h)) / (1 + exp(x)) without overflow for large x
        let ratio = if x > 0.0 {
            (x / (1.0 + h) - x).exp() / (1.0 + (-x).exp())
        } else {
            (x / (1.0 + h)).exp() / (1.0 + x.exp())
        };
        scale * ratio
    }
}

pub fn eval_duthie_response(c: &DuthieCoefficients, t: f64, w: f64) -> Result<f64> {
    c.validate()?;
    if !(w >= c.c) {
        return Err(Error::Domain(format!("wetness {w} is below the threshold c = {}", c.c)));
    }
    let ft = c.temperature_factor(t);
    Ok(match c.form {
        DuthieForm::Form1 => ft * (1.0 - (-(c.b * (w - c.c)).powf(c.d)).exp()),
        DuthieForm::Form2 => c.a * (1.0 - (-(ft * (w - c.c)).powf(c.d)).exp()),
    })
}

/// Selects one regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum SeverityModel {
    Asi(AsiCoefficients),
    Dodd {
        #[serde(flatten)]
        coefficients: DoddCoefficients,
        incubation: f64,
    },
    Duthie(DuthieCoefficients),
}

/// One weather observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherSample {
    pub t: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    #[serde(rename = "W")]
    pub wetness: f64,
    #[serde(rename = "H")]
    pub humidity: f64,
}

impl SeverityModel {
    pub fn eval(&self, s: &WeatherSample) -> Result<f64> {
        match self {
            SeverityModel::Asi(c) => Ok(eval_asi(c, s.temperature, s.wetness)),
            SeverityModel::Dodd { coefficients, incubation } => {
                eval_dodd_fraction(coefficients, s.temperature, s.humidity, *incubation)
            }
            SeverityModel::Duthie(c) => eval_duthie_response(c, s.temperature, s.wetness),
        }
    }
}

/// `α(t) = max(0, scale · model(weather(t)))`, piecewise linear between
/// observations.
pub fn weather_alpha(model: &SeverityModel, scale: f64, weather: &[WeatherSample]) -> Result<Rate> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(Error::param("scale", "must be finite and nonnegative"));
    }
    let times = weather.iter().map(|s| s.t).collect();
    let values = weather
        .iter()
        .map(|s| model.eval(s).map(|v| (scale * v).max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Rate::Series(TimeSeries::new(times, values)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn duthie(form: DuthieForm) -> DuthieCoefficients {
        DuthieCoefficients {
            a: 0.8,
            b: 0.3,
            c: 2.0,
            d: 1.5,
            e: 0.05,
            t_mid: 25.0,
            g: 0.4,
            h: 2.0,
            form,
        }
    }

    #[test]
    fn asi_examples() {
        let zero = AsiCoefficients::default();
        assert_eq!(eval_asi(&zero, 12.0, 7.0), 0.0);
        let one = AsiCoefficients { a0: 1.0, ..zero };
        assert_eq!(eval_asi(&one, -3.0, 40.0), 1.0);
        let cross = AsiCoefficients { a11: 1.0, ..zero };
        assert_eq!(eval_asi(&cross, 2.0, 3.0), 6.0);
        // squared terms pair as printed: a02 with T², a20 with W²
        let sq = AsiCoefficients { a02: 1.0, a20: 10.0, ..zero };
        assert_eq!(eval_asi(&sq, 2.0, 3.0), 4.0 + 90.0);
    }

    #[test]
    fn dodd_examples() {
        let zero = DoddCoefficients::default();
        assert_eq!(eval_dodd_fraction(&zero, 20.0, 90.0, 1.0).unwrap(), 0.5);
        let b = DoddCoefficients { b: 1.0, ..zero };
        let p = eval_dodd_fraction(&b, 0.0, 0.0, std::f64::consts::E).unwrap();
        assert!((p - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((p - 0.731).abs() < 1e-3);
        assert!(eval_dodd_fraction(&b, 0.0, 0.0, 0.0).is_err());
        assert!(eval_dodd_fraction(&b, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn duthie_examples() {
        for form in [DuthieForm::Form1, DuthieForm::Form2] {
            assert_eq!(eval_duthie_response(&duthie(form), 20.0, 2.0).unwrap(), 0.0);
            assert!(eval_duthie_response(&duthie(form), 20.0, 1.0).is_err());
        }
        let c = duthie(DuthieForm::Form2);
        let far = eval_duthie_response(&c, 25.0, 1e6).unwrap();
        assert!((far - c.a).abs() < 1e-12);
        // at T = f the logistic bracket is exp(0)/(1+exp(0)) = 1/2
        let h: f64 = 2.0;
        let expect = 0.05 * (1.0 + h) * h.powf(h / (1.0 + h)) / 2.0;
        assert!((c.temperature_factor(25.0) - expect).abs() < 1e-15);
        assert!(c.temperature_factor(1e4).is_finite());
        let bad = DuthieCoefficients { g: 0.0, ..c };
        assert!(eval_duthie_response(&bad, 20.0, 3.0).is_err());
    }

    #[test]
    fn form1_matches_form2_when_aligned() {
        // form1 with b = f(T) equals form2 with a = f(T)
        let c1 = duthie(DuthieForm::Form1);
        let t = 22.0;
        let ft = c1.temperature_factor(t);
        let c1 = DuthieCoefficients { b: ft, ..c1 };
        let c2 = DuthieCoefficients {
            a: ft,
            form: DuthieForm::Form2,
            ..c1
        };
        for w in [2.5, 5.0, 12.0] {
            let r1 = eval_duthie_response(&c1, t, w).unwrap();
            let r2 = eval_duthie_response(&c2, t, w).unwrap();
            assert!((r1 - r2).abs() < 1e-15);
        }
    }

    #[test]
    fn weather_adapter_clamps_negative_pressure() {
        let m = SeverityModel::Asi(AsiCoefficients {
            a0: -1.0,
            a10: 0.1,
            ..Default::default()
        });
        let w = [0.0, 10.0, 20.0]
            .iter()
            .enumerate()
            .map(|(i, &temp)| WeatherSample {
                t: i as f64 * 0.5,
                temperature: temp,
                wetness: 0.0,
                humidity: 0.0,
            })
            .collect::<Vec<_>>();
        let rate = weather_alpha(&m, 2.0, &w).unwrap();
        assert_eq!(rate.eval(0.0, 0.0), 0.0);
        assert_eq!(rate.eval(0.5, 0.0), 0.0);
        assert!((rate.eval(1.0, 0.0) - 2.0).abs() < 1e-15);
        assert!((rate.eval(0.75, 0.0) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn dodd_is_a_fraction_monotone_in_time(
            a0 in -3.0..3.0f64, b in 0.01..1.0f64, t in 0.01..20.0f64, dt in 0.01..10.0f64,
        ) {
            let c = DoddCoefficients { a0, b, ..Default::default() };
            let p = eval_dodd_fraction(&c, 0.0, 0.0, t).unwrap();
            let q = eval_dodd_fraction(&c, 0.0, 0.0, t + dt).unwrap();
            prop_assert!(p > 0.0 && p < 1.0);
            prop_assert!(q >= p);
            let back = (p / (1.0 - p)).ln();
            prop_assert!((back - dodd_logit(&c, 0.0, 0.0, t).unwrap()).abs() < 1e-12 * back.abs().max(1.0) + 1e-12);
        }

        #[test]
        fn duthie_nondecreasing_in_wetness(
            a in 0.1..2.0f64, b in 0.01..2.0f64, c in 0.0..5.0f64, d in 0.2..4.0f64,
            e in 0.01..1.0f64, f in 0.0..30.0f64, g in 0.01..1.0f64, h in 0.1..5.0f64,
            temp in 0.0..40.0f64, w in 0.0..30.0f64, dw in 0.0..10.0f64, form1 in any::<bool>(),
        ) {
            let co = DuthieCoefficients {
                a, b, c, d, e, t_mid: f, g, h,
                form: if form1 { DuthieForm::Form1 } else { DuthieForm::Form2 },
            };
            let r0 = eval_duthie_response(&co, temp, c + w).unwrap();
            let r1 = eval_duthie_response(&co, temp, c + w + dw).unwrap();
            prop_assert!(r1 >= r0);
        }
    }
}
