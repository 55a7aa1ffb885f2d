//! Domain types shared by every other module: type names, type sets with
//! their set algebra, services, catalogs and exact rationals.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

fn validate_token(token: &str) -> Result<()> {
    let reason = if token.is_empty() {
        "empty token"
    } else if token.chars().any(char::is_whitespace) {
        "contains whitespace"
    } else if token.contains(':') {
        "contains ':'"
    } else if token.contains("->") {
        "contains '->'"
    } else if token.contains(',') {
        "contains ','"
    } else if token.contains('#') {
        "contains '#'"
    } else {
        return Ok(());
    };
    Err(Error::InvalidToken {
        token: token.to_owned(),
        reason,
    })
}

macro_rules! token_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(token: &str) -> Result<Self> {
                validate_token(token)?;
                Ok(Self(Arc::from(token)))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Debug::fmt(&*self.0, f)
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                Self::new(s)
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl PartialEq<str> for $name {
            fn eq(&self, other: &str) -> bool {
                &*self.0 == other
            }
        }

        impl PartialEq<&str> for $name {
            fn eq(&self, other: &&str) -> bool {
                &*self.0 == *other
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.0)
            }
        }
    };
}

token_newtype!(
    /// An opaque, case-sensitive data type token such as `city` or `zipcode`.
    TypeName
);

token_newtype!(
    /// The name of an atomic service.
    ServiceName
);

/// A finite set of type names kept in lexicographic order.
///
/// The canonical text form is the sorted members joined by `,` with no
/// spaces; the empty set renders as the empty string.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeSet(BTreeSet<TypeName>);

impl TypeSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from tokens, rejecting invalid tokens and duplicates.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for token in tokens {
            let name = TypeName::new(token.as_ref())?;
            if !set.insert(name) {
                return Err(Error::DuplicateType(token.as_ref().to_owned()));
            }
        }
        Ok(Self(set))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of members.
    pub fn card(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &TypeName> + '_ {
        self.0.iter()
    }

    pub fn intersect(&self, other: &TypeSet) -> TypeSet {
        Self(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn union(&self, other: &TypeSet) -> TypeSet {
        Self(self.0.union(&other.0).cloned().collect())
    }

    /// Set difference `self ∖ other`.
    pub fn remove(&self, other: &TypeSet) -> TypeSet {
        Self(self.0.difference(&other.0).cloned().collect())
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &TypeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint_from(&self, other: &TypeSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    /// Size of `self ∩ other` without materialising the intersection.
    pub fn overlap(&self, other: &TypeSet) -> usize {
        self.0.intersection(&other.0).count()
    }

    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TypeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(t.as_str())?;
        }
        Ok(())
    }
}

impl fmt::Debug for TypeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

/// Parses the canonical comma-separated form. The empty string is the empty
/// set; surrounding whitespace around each member is ignored.
impl FromStr for TypeSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Ok(Self::new());
        }
        Self::from_tokens(s.split(',').map(str::trim))
    }
}

impl FromIterator<TypeName> for TypeSet {
    fn from_iter<I: IntoIterator<Item = TypeName>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a TypeSet {
    type Item = &'a TypeName;
    type IntoIter = std::collections::btree_set::Iter<'a, TypeName>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl Serialize for TypeSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter())
    }
}

/// An atomic service: a name with the types it consumes and produces.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Service {
    name: ServiceName,
    inputs: TypeSet,
    outputs: TypeSet,
}

impl Service {
    pub fn new(name: ServiceName, inputs: TypeSet, outputs: TypeSet) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::EmptyInputs(name.to_string()));
        }
        if outputs.is_empty() {
            return Err(Error::EmptyOutputs(name.to_string()));
        }
        Ok(Self {
            name,
            inputs,
            outputs,
        })
    }

    /// Convenience constructor from the canonical comma-separated forms.
    pub fn parse(name: &str, inputs: &str, outputs: &str) -> Result<Self> {
        Self::new(ServiceName::new(name)?, inputs.parse()?, outputs.parse()?)
    }

    pub fn name(&self) -> &ServiceName {
        &self.name
    }

    pub fn inputs(&self) -> &TypeSet {
        &self.inputs
    }

    pub fn outputs(&self) -> &TypeSet {
        &self.outputs
    }
}

/// A named collection of services with pairwise distinct names, always
/// iterated in lexicographic name order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Catalog {
    name: ServiceName,
    services: Vec<Service>,
}

impl Catalog {
    pub fn new(name: ServiceName, services: impl IntoIterator<Item = Service>) -> Result<Self> {
        let mut services: Vec<Service> = services.into_iter().collect();
        services.sort_by(|a, b| a.name.cmp(&b.name));
        if let Some(pair) = services.windows(2).find(|w| w[0].name == w[1].name) {
            return Err(Error::DuplicateService(pair[1].name.to_string()));
        }
        Ok(Self { name, services })
    }

    pub fn name(&self) -> &ServiceName {
        &self.name
    }

    pub fn services(&self) -> &[Service] {
        &self.services
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Service> {
        self.services
            .binary_search_by(|s| s.name.as_str().cmp(name))
            .ok()
            .map(|i| &self.services[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }
}

/// A non-negative exact fraction in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(Ratio<u64>);

impl Rational {
    /// Panics if `denom` is zero.
    pub fn new(numer: u64, denom: u64) -> Self {
        Self(Ratio::new(numer, denom))
    }

    pub fn zero() -> Self {
        Self::new(0, 1)
    }

    pub fn one() -> Self {
        Self::new(1, 1)
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn is_one(&self) -> bool {
        self.numer() == self.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.numer() == 0
    }

    /// Always `p/q`, even for integers (`1/1`, `0/1`).
    pub fn to_fraction_string(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

/// Compact form: `p/q`, or just `p` when the denominator is 1.
impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}
