use std::fmt;

use thiserror::Error;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
pub const OWL_THING: &str = "http://www.w3.org/2002/07/owl#Thing";
pub const DBO_AGENT: &str = "http://dbpedia.org/ontology/Agent";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IriError {
    #[error("IRI is empty")]
    Empty,
    #[error("IRI `{0}` contains a forbidden character")]
    ForbiddenChar(String),
    #[error("IRI `{0}` has no scheme")]
    NotAbsolute(String),
}

/// An absolute IRI, stored without the surrounding angle brackets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, IriError> {
        let value = value.into();
        if value.is_empty() {
            return Err(IriError::Empty);
        }
        if value.chars().any(is_forbidden_iri_char) {
            return Err(IriError::ForbiddenChar(value));
        }
        if !has_scheme(&value) {
            return Err(IriError::NotAbsolute(value));
        }
        Ok(Iri(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::str::FromStr for Iri {
    type Err = IriError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Iri::new(s)
    }
}

pub(crate) fn is_forbidden_iri_char(c: char) -> bool {
    c <= ' ' || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
}

fn has_scheme(value: &str) -> bool {
    let Some((scheme, _)) = value.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub lexical: String,
    pub language: Option<String>,
    pub datatype: Option<Iri>,
}

impl Literal {
    pub fn simple(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            language: None,
            datatype: None,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("\"")?;
        for c in self.lexical.chars() {
            match c {
                '"' => f.write_str("\\\"")?,
                '\\' => f.write_str("\\\\")?,
                '\n' => f.write_str("\\n")?,
                '\r' => f.write_str("\\r")?,
                c => write!(f, "{c}")?,
            }
        }
        f.write_str("\"")?;
        if let Some(lang) = &self.language {
            write!(f, "@{lang}")?;
        } else if let Some(dt) = &self.datatype {
            write!(f, "^^{dt}")?;
        }
        Ok(())
    }
}

/// Object position of a triple: either an IRI or a literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Object {
    Iri(Iri),
    Literal(Literal),
}

impl Object {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Object::Iri(iri) => Some(iri),
            Object::Literal(_) => None,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Object::Literal(_))
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Object::Iri(iri) => iri.fmt(f),
            Object::Literal(lit) => lit.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Object,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: Object) -> Self {
        Triple {
            subject,
            predicate,
            object,
        }
    }

    pub fn is_type_assertion(&self) -> bool {
        self.predicate.as_str() == RDF_TYPE && !self.object.is_literal()
    }
}

/// Serializes as a single N-Triples statement, without the trailing newline.
impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_validation() {
        assert!(Iri::new("http://a").is_ok());
        assert_eq!(Iri::new(""), Err(IriError::Empty));
        assert!(matches!(Iri::new("http://a b"), Err(IriError::ForbiddenChar(_))));
        assert!(matches!(Iri::new("http://a>"), Err(IriError::ForbiddenChar(_))));
        assert!(matches!(Iri::new("relative/path"), Err(IriError::NotAbsolute(_))));
        assert!(matches!(Iri::new("1http:x"), Err(IriError::NotAbsolute(_))));
    }

    #[test]
    fn iri_serializes_with_brackets() {
        let iri = Iri::new("http://dbpedia.org/resource/Ulm").unwrap();
        assert_eq!(iri.to_string(), "<http://dbpedia.org/resource/Ulm>");
        assert_eq!(iri.as_str(), "http://dbpedia.org/resource/Ulm");
    }

    #[test]
    fn literal_escaping() {
        let lit = Literal::simple("a \"q\" \\ \n");
        assert_eq!(lit.to_string(), r#""a \"q\" \\ \n""#);
        let tagged = Literal {
            lexical: "Ulm".into(),
            language: Some("de".into()),
            datatype: None,
        };
        assert_eq!(tagged.to_string(), "\"Ulm\"@de");
    }
}
