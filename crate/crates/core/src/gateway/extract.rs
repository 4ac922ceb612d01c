//! Structured-output extraction from free-form model responses.

use std::fmt;

use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldType {
    String,
    Number,
    Bool,
    Array,
    Object,
    Any,
}

impl FieldType {
    fn accepts(self, v: &Value) -> bool {
        match self {
            FieldType::String => v.is_string(),
            FieldType::Number => v.is_number(),
            FieldType::Bool => v.is_boolean(),
            FieldType::Array => v.is_array(),
            FieldType::Object => v.is_object(),
            FieldType::Any => true,
        }
    }
}

impl fmt::Display for FieldType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldType::String => "string",
            FieldType::Number => "number",
            FieldType::Bool => "boolean",
            FieldType::Array => "array",
            FieldType::Object => "object",
            FieldType::Any => "any",
        })
    }
}

/// Expected top-level shape of a response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    /// Object with these required fields.
    Object(Vec<(&'static str, FieldType)>),
    /// List whose items all have this type.
    List(FieldType),
}

impl Shape {
    pub fn object(fields: &[(&'static str, FieldType)]) -> Self {
        Shape::Object(fields.to_vec())
    }

    fn check(&self, v: &Value) -> Result<(), String> {
        match (self, v) {
            (Shape::Object(fields), Value::Object(map)) => {
                for (name, ty) in fields {
                    match map.get(*name) {
                        None => return Err(format!("missing field '{name}'")),
                        Some(x) if !ty.accepts(x) => return Err(format!("field '{name}' is not a {ty}")),
                        Some(_) => {}
                    }
                }
                Ok(())
            }
            (Shape::List(ty), Value::Array(items)) => match items.iter().position(|x| !ty.accepts(x)) {
                Some(i) => Err(format!("list item {i} is not a {ty}")),
                None => Ok(()),
            },
            (Shape::Object(_), _) => Err("expected an object".into()),
            (Shape::List(_), _) => Err("expected a list".into()),
        }
    }

    fn opener(&self) -> u8 {
        match self {
            Shape::Object(_) => b'{',
            Shape::List(_) => b'[',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("extraction failed at bytes {}..{}: {message} (near {snippet:?})", .span.0, .span.1)]
pub struct ExtractionError {
    pub message: String,
    /// Byte range of the offending text in the response.
    pub span: (usize, usize),
    pub snippet: String,
}

impl ExtractionError {
    fn new(text: &str, span: (usize, usize), message: String) -> Self {
        let end = span.1.min(span.0 + 80).min(text.len());
        let mut start = span.0.min(end);
        while !text.is_char_boundary(start) {
            start -= 1;
        }
        let mut stop = end;
        while !text.is_char_boundary(stop) {
            stop += 1;
        }
        Self {
            message,
            span,
            snippet: text[start..stop].to_string(),
        }
    }
}

/// Blanks out Markdown fence lines, keeping byte offsets intact.
fn strip_fences(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            out.extend(line.bytes().map(|b| if b == b'\n' { '\n' } else { ' ' }));
        } else {
            out.push_str(line);
        }
    }
    out
}

/// First well-formed value starting with the shape's opening bracket.
fn first_block(text: &str, opener: u8) -> Option<(Value, (usize, usize))> {
    let bytes = text.as_bytes();
    for (i, b) in bytes.iter().enumerate() {
        if *b != opener {
            continue;
        }
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(v)) = stream.next() {
            return Some((v, (i, i + stream.byte_offset())));
        }
    }
    None
}

/// Parses the response as a whole; failing that, one repair pass strips
/// fences and surrounding prose and takes the first well-formed block.
pub fn extract_structured(text: &str, shape: &Shape) -> Result<Value, ExtractionError> {
    let trimmed = text.trim();
    if let Ok(v) = serde_json::from_str::<Value>(trimmed) {
        let start = text.len() - text.trim_start().len();
        return match shape.check(&v) {
            Ok(()) => Ok(v),
            Err(m) => Err(ExtractionError::new(text, (start, start + trimmed.len()), m)),
        };
    }
    let repaired = strip_fences(text);
    match first_block(&repaired, shape.opener()) {
        Some((v, span)) => match shape.check(&v) {
            Ok(()) => Ok(v),
            Err(m) => Err(ExtractionError::new(text, span, m)),
        },
        None => Err(ExtractionError::new(
            text,
            (0, text.len()),
            format!("no well-formed {} block", if shape.opener() == b'{' { "object" } else { "list" }),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sql_shape() -> Shape {
        Shape::object(&[("sql", FieldType::String)])
    }

    #[test]
    fn clean_block() {
        assert_eq!(extract_structured(" {\"sql\": \"SELECT 1\"} ", &sql_shape()).unwrap(), json!({"sql": "SELECT 1"}));
    }

    #[test]
    fn prose_and_fences() {
        let text = "Sure! Here it is:\n```json\n{\"sql\": \"SELECT {x}\"}\n```\nHope this helps.";
        assert_eq!(extract_structured(text, &sql_shape()).unwrap(), json!({"sql": "SELECT {x}"}));
        let text = "Result: [1, 2] and more";
        assert_eq!(extract_structured(text, &Shape::List(FieldType::Number)).unwrap(), json!([1, 2]));
    }

    #[test]
    fn skips_broken_blocks() {
        let text = "first {broken and then {\"sql\": \"x\"}";
        assert_eq!(extract_structured(text, &sql_shape()).unwrap(), json!({"sql": "x"}));
    }

    #[test]
    fn failures_carry_spans() {
        let e = extract_structured("no json here", &sql_shape()).unwrap_err();
        assert_eq!(e.span, (0, 12));
        let text = "ok: {\"query\": 1}";
        let e = extract_structured(text, &sql_shape()).unwrap_err();
        assert_eq!(e.span, (4, 16));
        assert!(e.message.contains("'sql'"));
        let e = extract_structured("{\"sql\": 3}", &sql_shape()).unwrap_err();
        assert!(e.message.contains("not a string"));
    }

    #[test]
    fn fence_stripping_keeps_offsets() {
        let text = "```json\n{\"sql\": 1}\n```";
        assert_eq!(strip_fences(text).len(), text.len());
        let text = "```ünï\n";
        assert_eq!(strip_fences(text).len(), text.len());
    }
}
