//! Dimensioned quantities for configuration files.
//!
//! Every dimensional value is written as a string with a unit suffix, e.g.
//! `"100GHz"`, `"20ps"`, `"920nm"`, `"0.005/ps"`. Ordinary frequencies
//! (`Hz` family) are converted to angular frequencies here, and nowhere else.

use std::f64::consts::TAU;
use std::fmt;
use std::marker::PhantomData;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

pub trait Dimension {
    const NAME: &'static str;
    /// Factor converting one `unit` into the internal unit, if recognized.
    fn factor(unit: &str) -> Option<f64>;
}

/// Angular frequency, internal unit rad/ps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency;
/// Time, internal unit ps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Time;
/// Length, internal unit nm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Length;
/// Rate (inverse time), internal unit 1/ps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate;

impl Dimension for Frequency {
    const NAME: &'static str = "frequency";
    fn factor(unit: &str) -> Option<f64> {
        Some(match unit {
            "Hz" => TAU * 1e-12,
            "kHz" => TAU * 1e-9,
            "MHz" => TAU * 1e-6,
            "GHz" => TAU * 1e-3,
            "THz" => TAU,
            "rad/s" => 1e-12,
            "rad/ns" => 1e-3,
            "rad/ps" => 1.0,
            "rad/fs" => 1e3,
            _ => return None,
        })
    }
}

impl Dimension for Time {
    const NAME: &'static str = "time";
    fn factor(unit: &str) -> Option<f64> {
        Some(match unit {
            "fs" => 1e-3,
            "ps" => 1.0,
            "ns" => 1e3,
            "us" | "μs" | "µs" => 1e6,
            "ms" => 1e9,
            "s" => 1e12,
            _ => return None,
        })
    }
}

impl Dimension for Length {
    const NAME: &'static str = "length";
    fn factor(unit: &str) -> Option<f64> {
        Some(match unit {
            "nm" => 1.0,
            "um" | "μm" | "µm" => 1e3,
            _ => return None,
        })
    }
}

impl Dimension for Rate {
    const NAME: &'static str = "rate";
    fn factor(unit: &str) -> Option<f64> {
        Some(match unit {
            "/fs" => 1e3,
            "/ps" => 1.0,
            "/ns" => 1e-3,
            "/us" | "/μs" | "/µs" => 1e-6,
            "/s" => 1e-12,
            _ => return None,
        })
    }
}

/// A number with a unit suffix, kept verbatim so that serialization
/// reproduces the input.
pub struct Quantity<D> {
    value: f64,
    unit: String,
    _d: PhantomData<D>,
}

impl<D> Clone for Quantity<D> {
    fn clone(&self) -> Self {
        Quantity {
            value: self.value,
            unit: self.unit.clone(),
            _d: PhantomData,
        }
    }
}

impl<D> PartialEq for Quantity<D> {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value && self.unit == other.unit
    }
}

impl<D: Dimension> fmt::Debug for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({self})", D::NAME)
    }
}

impl<D> fmt::Display for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.value, self.unit)
    }
}

impl<D: Dimension> Quantity<D> {
    pub fn new(value: f64, unit: &str) -> Result<Self, String> {
        if D::factor(unit).is_none() {
            return Err(format!("unknown {} unit {unit:?}", D::NAME));
        }
        if !value.is_finite() {
            return Err(format!("{} value must be finite", D::NAME));
        }
        Ok(Quantity {
            value,
            unit: unit.to_string(),
            _d: PhantomData,
        })
    }

    /// Value in the internal unit.
    pub fn internal(&self) -> f64 {
        self.value * D::factor(&self.unit).expect("unit checked at construction")
    }
}

impl<D: Dimension> FromStr for Quantity<D> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let split = s
            .char_indices()
            .find(|&(i, c)| {
                !(c.is_ascii_digit()
                    || c == '.'
                    || c == '+'
                    || c == '-'
                    || ((c == 'e' || c == 'E')
                        && s[i + 1..].starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+')))
            })
            .map(|(i, _)| i)
            .unwrap_or(s.len());
        let (num, unit) = s.split_at(split);
        let unit = unit.trim();
        if unit.is_empty() {
            return Err(format!("{} {s:?} needs a unit suffix", D::NAME));
        }
        let value: f64 = num
            .parse()
            .map_err(|_| format!("cannot parse number in {} {s:?}", D::NAME))?;
        Quantity::new(value, unit)
    }
}

impl<D: Dimension> Serialize for Quantity<D> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de, D: Dimension> Deserialize<'de> for Quantity<D> {
    fn deserialize<De: Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        struct V<D>(PhantomData<D>);
        impl<D: Dimension> de::Visitor<'_> for V<D> {
            type Value = Quantity<D>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a {} string with a unit suffix", D::NAME)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_str(V(PhantomData))
    }
}

pub type FrequencyQ = Quantity<Frequency>;
pub type TimeQ = Quantity<Time>;
pub type LengthQ = Quantity<Length>;
pub type RateQ = Quantity<Rate>;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hertz_becomes_angular() {
        let f: FrequencyQ = "100GHz".parse().unwrap();
        assert_relative_eq!(f.internal(), TAU * 0.1, max_relative = 1e-15);
        let f: FrequencyQ = "4 THz".parse().unwrap();
        assert_relative_eq!(f.internal(), TAU * 4.0, max_relative = 1e-15);
        let f: FrequencyQ = "-2.5e1rad/ps".parse().unwrap();
        assert_eq!(f.internal(), -25.0);
    }

    #[test]
    fn times_lengths_rates() {
        assert_relative_eq!("100fs".parse::<TimeQ>().unwrap().internal(), 0.1, max_relative = 1e-15);
        assert_relative_eq!("10us".parse::<TimeQ>().unwrap().internal(), 1e7, max_relative = 1e-15);
        assert_eq!("0.92um".parse::<LengthQ>().unwrap().internal(), 920.0);
        assert_eq!("0.005/ps".parse::<RateQ>().unwrap().internal(), 0.005);
    }

    #[test]
    fn rejects_bare_and_wrong_units() {
        assert!("100".parse::<FrequencyQ>().is_err());
        assert!("20ps".parse::<FrequencyQ>().is_err());
        assert!("GHz".parse::<FrequencyQ>().is_err());
        #[derive(Deserialize, Debug)]
        #[allow(dead_code)]
        struct T {
            f: FrequencyQ,
        }
        assert!(toml::from_str::<T>("f = 100.0").is_err());
        assert!(toml::from_str::<T>("f = \"100GHz\"").is_ok());
    }

    #[test]
    fn display_round_trips() {
        for s in ["100GHz", "-0.25THz", "1e-3rad/ps", "20ps"] {
            let q: Result<FrequencyQ, _> = s.parse();
            if let Ok(q) = q {
                let again: FrequencyQ = q.to_string().parse().unwrap();
                assert_eq!(q, again);
            }
        }
    }
}
