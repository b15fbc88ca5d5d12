//! Lexing of MongoDB filter strings and the engineered filter features.
//!
//! The lexer is total: injection payloads are frequently not JSON, so any run
//! of characters it does not recognize becomes a field-name token. Quoted
//! strings are opaque. A quoted string in key position (followed by `:`) whose
//! content starts with `$` is an operator when it names a known keyword and a
//! bare-dollar token otherwise.

use serde_json::{Map, Value};

pub const COMPARISON: &[&str] = &["$eq", "$gt", "$gte", "$in", "$lt", "$lte", "$ne", "$nin"];
pub const LOGICAL: &[&str] = &["$and", "$not", "$nor", "$or"];
pub const ELEMENT: &[&str] = &["$exists", "$type"];
pub const EVALUATION: &[&str] = &["$expr", "$jsonSchema", "$mod", "$regex", "$text", "$where"];
pub const ARRAY: &[&str] = &["$all", "$elemMatch", "$size"];
pub const BITWISE: &[&str] = &["$bitsAllClear", "$bitsAllSet", "$bitsAnyClear", "$bitsAnySet"];
/// Projection operators. The positional `$` is tracked by the bare-dollar flag instead.
pub const PROJECTION: &[&str] = &["$elemMatch", "$meta", "$slice"];
pub const MISC: &[&str] = &["$comment", "$rand", "$natural"];
/// Keywords that only qualify another operator (`$regex`/`$options`, `$text`/`$search`).
pub const MODIFIERS: &[&str] = &[
    "$options",
    "$search",
    "$language",
    "$caseSensitive",
    "$diacriticSensitive",
];

/// Operators with a dedicated presence column, in column order.
pub const NAMED_OPERATORS: [&str; 11] = [
    "$eq",
    "$gt",
    "$in",
    "$ne",
    "$nin",
    "$type",
    "$mod",
    "$regex",
    "$where",
    "$elemMatch",
    "$size",
];

pub fn is_known_keyword(word: &str) -> bool {
    [
        COMPARISON, LOGICAL, ELEMENT, EVALUATION, ARRAY, BITWISE, PROJECTION, MISC, MODIFIERS,
    ]
    .iter()
    .any(|set| set.contains(&word))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Operator,
    BareDollar,
    FieldName,
    StringLiteral,
    NumberLiteral,
    NullLiteral,
    BooleanLiteral,
    Punctuation,
    Comparison,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterToken {
    pub kind: TokenKind,
    /// Exact source slice, quotes included.
    pub text: String,
    /// Offset in characters from the start of the input.
    pub position: usize,
}

impl FilterToken {
    /// Text with one pair of surrounding quotes removed.
    pub fn unquoted(&self) -> &str {
        strip_quotes(&self.text)
    }
}

fn strip_quotes(s: &str) -> &str {
    for q in ['"', '\''] {
        if let Some(inner) = s.strip_prefix(q) {
            return inner.strip_suffix(q).unwrap_or(inner);
        }
    }
    s
}

fn is_punct(c: char) -> bool {
    matches!(c, '{' | '}' | '[' | ']' | ':' | ',' | '(' | ')' | ';')
}

fn is_word_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.'
}

fn dollar_kind(content: &str) -> TokenKind {
    if is_known_keyword(content) {
        TokenKind::Operator
    } else {
        TokenKind::BareDollar
    }
}

/// Best-effort lexing of a filter string; never fails.
pub fn tokenize_filter(text: &str) -> Vec<FilterToken> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut tokens = Vec::new();
    let mut i = 0;

    let next_is_colon = |from: usize| {
        chars[from..]
            .iter()
            .find(|c| !c.is_whitespace())
            .is_some_and(|&c| c == ':')
    };

    while i < n {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if is_punct(c) {
            i += 1;
            TokenKind::Punctuation
        } else if c == '<' || c == '>' {
            i += 1;
            if i < n && chars[i] == '=' {
                i += 1;
            }
            TokenKind::Comparison
        } else if c == '"' || c == '\'' {
            i += 1;
            while i < n && chars[i] != c {
                if chars[i] == '\\' {
                    i += 1;
                }
                i += 1;
            }
            i = (i + 1).min(n);
            let content: String = chars[start..i].iter().collect();
            let content = strip_quotes(&content);
            if next_is_colon(i) && content.starts_with('$') {
                dollar_kind(content)
            } else if next_is_colon(i) {
                TokenKind::FieldName
            } else {
                TokenKind::StringLiteral
            }
        } else if c == '$' {
            i += 1;
            while i < n && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            dollar_kind(&word)
        } else if c.is_ascii_digit() || (c == '-' && i + 1 < n && chars[i + 1].is_ascii_digit()) {
            i += 1;
            while i < n && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < n && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < n && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < n && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < n && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < n && chars[j].is_ascii_digit() {
                    i = j;
                    while i < n && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            TokenKind::NumberLiteral
        } else if is_word_start(c) {
            while i < n && is_word_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            match word.as_str() {
                "null" if !next_is_colon(i) => TokenKind::NullLiteral,
                "true" | "false" if !next_is_colon(i) => TokenKind::BooleanLiteral,
                _ => TokenKind::FieldName,
            }
        } else {
            // Unknown run: stop at anything that starts another token class.
            while i < n {
                let d = chars[i];
                if d.is_whitespace()
                    || is_punct(d)
                    || matches!(d, '"' | '\'' | '$' | '<' | '>')
                    || is_word_start(d)
                    || d.is_ascii_digit()
                {
                    break;
                }
                i += 1;
            }
            TokenKind::FieldName
        };
        tokens.push(FilterToken {
            kind,
            text: chars[start..i].iter().collect(),
            position: start,
        });
    }
    tokens
}

/// Engineered features of one filter string.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterFeatures {
    /// One flag per entry of [`NAMED_OPERATORS`].
    pub op_flags: [bool; 11],
    pub dollar: bool,
    pub cmp_ge: bool,
    pub cmp_le: bool,
    pub cmp_lt: bool,
    pub cmp_gt: bool,
    pub selector_comparison: bool,
    pub selector_logical: bool,
    pub selector_element: bool,
    pub selector_evaluation: bool,
    pub selector_array: bool,
    pub selector_bitwise: bool,
    pub projection: bool,
    pub misc: bool,
    pub selector: bool,
    pub standard_logical: bool,
    pub all_operators: bool,
    pub null_operand: bool,
    pub regex_null_operand: bool,
    pub text: String,
    pub query_length_raw: usize,
    pub keywords_only: String,
    pub query_length_keywords_only: usize,
}

/// A column value produced by [`FilterFeatures::columns`].
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureValue {
    Flag(bool),
    Count(usize),
    Text(String),
}

/// Column names in the order [`FilterFeatures::columns`] emits them.
pub const FEATURE_COLUMNS: [&str; 33] = [
    "$eq",
    "$gt",
    "$in",
    "$ne",
    "$nin",
    "$type",
    "$mod",
    "$regex",
    "$where",
    "$elemMatch",
    "$size",
    "$",
    ">=",
    "<=",
    "<",
    ">",
    "selector_comparison",
    "selector_logical",
    "selector_element",
    "selector_evaluation",
    "selector_array",
    "selector_bitwise",
    "projection",
    "misc",
    "selector",
    "standard_logical",
    "all_operators",
    "null_operand",
    "regex_null_operand",
    "text",
    "query_length_raw",
    "keywords_only",
    "query_length_keywords_only",
];

impl FilterFeatures {
    pub fn op(&self, name: &str) -> Option<bool> {
        NAMED_OPERATORS
            .iter()
            .position(|&o| o == name)
            .map(|i| self.op_flags[i])
    }

    pub fn columns(&self) -> Vec<(&'static str, FeatureValue)> {
        use FeatureValue::*;
        let mut values: Vec<FeatureValue> = self.op_flags.iter().map(|&b| Flag(b)).collect();
        values.extend([
            Flag(self.dollar),
            Flag(self.cmp_ge),
            Flag(self.cmp_le),
            Flag(self.cmp_lt),
            Flag(self.cmp_gt),
            Flag(self.selector_comparison),
            Flag(self.selector_logical),
            Flag(self.selector_element),
            Flag(self.selector_evaluation),
            Flag(self.selector_array),
            Flag(self.selector_bitwise),
            Flag(self.projection),
            Flag(self.misc),
            Flag(self.selector),
            Flag(self.standard_logical),
            Flag(self.all_operators),
            Flag(self.null_operand),
            Flag(self.regex_null_operand),
            Text(self.text.clone()),
            Count(self.query_length_raw),
            Text(self.keywords_only.clone()),
            Count(self.query_length_keywords_only),
        ]);
        FEATURE_COLUMNS.iter().copied().zip(values).collect()
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (name, v) in self.columns() {
            let v = match v {
                FeatureValue::Flag(b) => Value::Bool(b),
                FeatureValue::Count(c) => Value::from(c),
                FeatureValue::Text(t) => Value::String(t),
            };
            map.insert(name.to_string(), v);
        }
        Value::Object(map)
    }
}

#[derive(Debug, Clone)]
enum Ctx {
    Object { key: Option<String> },
    Array { owner: Option<String> },
}

/// The operator keyword that owns the value at the current position, if any.
fn owning_operator(stack: &[Ctx]) -> Option<&str> {
    match stack.last()? {
        Ctx::Object { key } => key.as_deref(),
        Ctx::Array { owner } => owner.as_deref(),
    }
}

pub fn extract(text: &str) -> FilterFeatures {
    let tokens = tokenize_filter(text);
    let mut f = FilterFeatures {
        text: text.to_string(),
        query_length_raw: text.chars().count(),
        ..FilterFeatures::default()
    };

    let mut ops: Vec<&str> = Vec::new();
    // Each frame remembers the operator keyword currently owning its values
    // (`None` for field names).
    let mut stack: Vec<Ctx> = Vec::new();

    for (idx, tok) in tokens.iter().enumerate() {
        let is_key = tokens
            .get(idx + 1)
            .is_some_and(|t| t.kind == TokenKind::Punctuation && t.text == ":");
        match tok.kind {
            TokenKind::Operator => {
                ops.push(operator_keyword(tok));
                if is_key {
                    set_key(&mut stack, Some(operator_keyword(tok).to_string()));
                }
            }
            TokenKind::BareDollar => {
                f.dollar = true;
                if is_key {
                    set_key(&mut stack, None);
                }
            }
            TokenKind::FieldName | TokenKind::StringLiteral if is_key => set_key(&mut stack, None),
            TokenKind::Comparison => match tok.text.as_str() {
                ">=" => f.cmp_ge = true,
                "<=" => f.cmp_le = true,
                "<" => f.cmp_lt = true,
                ">" => f.cmp_gt = true,
                _ => {}
            },
            TokenKind::NullLiteral => {
                if let Some(op) = owning_operator(&stack) {
                    f.null_operand = true;
                    if op == "$regex" {
                        f.regex_null_operand = true;
                    }
                }
            }
            TokenKind::Punctuation => match tok.text.as_str() {
                "{" => stack.push(Ctx::Object { key: None }),
                "[" => {
                    let owner = owning_operator(&stack).map(str::to_string);
                    stack.push(Ctx::Array { owner });
                }
                "}" | "]" => {
                    stack.pop();
                }
                _ => {}
            },
            _ => {}
        }
    }

    let any = |set: &[&str]| ops.iter().any(|o| set.contains(o));
    for (flag, name) in f.op_flags.iter_mut().zip(NAMED_OPERATORS) {
        *flag = ops.contains(&name);
    }
    f.selector_comparison = any(COMPARISON);
    f.selector_logical = any(LOGICAL);
    f.selector_element = any(ELEMENT);
    f.selector_evaluation = any(EVALUATION);
    f.selector_array = any(ARRAY);
    f.selector_bitwise = any(BITWISE);
    f.projection = any(PROJECTION);
    f.misc = any(MISC);
    f.selector = f.selector_comparison
        || f.selector_logical
        || f.selector_element
        || f.selector_evaluation
        || f.selector_array
        || f.selector_bitwise;
    f.standard_logical = f.selector_logical;
    f.all_operators = f.op_flags.iter().any(|&b| b) || f.selector || f.projection || f.misc;

    f.keywords_only = keywords_only_from(&tokens);
    f.query_length_keywords_only = f.keywords_only.chars().count();
    f
}

fn operator_keyword(tok: &FilterToken) -> &str {
    tok.unquoted()
}

fn set_key(stack: &mut [Ctx], key: Option<String>) {
    if let Some(Ctx::Object { key: slot }) = stack.last_mut() {
        *slot = key;
    }
}

fn keywords_only_from(tokens: &[FilterToken]) -> String {
    let mut out = String::new();
    for tok in tokens {
        match tok.kind {
            TokenKind::Operator | TokenKind::BareDollar => out.push_str(tok.unquoted()),
            TokenKind::Punctuation | TokenKind::Comparison | TokenKind::NullLiteral | TokenKind::BooleanLiteral => {
                out.push_str(&tok.text)
            }
            TokenKind::StringLiteral => {
                let content = tok.unquoted();
                if content.starts_with('$') && is_known_keyword(content) {
                    out.push_str(content);
                }
            }
            TokenKind::FieldName | TokenKind::NumberLiteral => {}
        }
    }
    out
}

/// Strip field names and literal values, keeping operator structure.
pub fn keywords_only(text: &str) -> String {
    keywords_only_from(&tokenize_filter(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        tokenize_filter(text).iter().map(|t| t.kind).collect()
    }

    #[test]
    fn lexes_simple_filter() {
        let toks = tokenize_filter(r#"{"a":{"$ne":null}}"#);
        assert_eq!(
            kinds(r#"{"a":{"$ne":null}}"#),
            vec![
                Punctuation,
                FieldName,
                Punctuation,
                Punctuation,
                Operator,
                Punctuation,
                NullLiteral,
                Punctuation,
                Punctuation
            ]
        );
        assert_eq!(toks[1].text, "\"a\"");
        assert_eq!(toks[4].unquoted(), "$ne");
        assert_eq!(toks[4].position, 6);
    }

    #[test]
    fn string_literals_are_opaque() {
        let toks = tokenize_filter(r#"{"$where":"this.x > 1"}"#);
        assert!(toks.iter().any(|t| t.kind == Operator && t.unquoted() == "$where"));
        assert!(!toks.iter().any(|t| t.kind == Comparison));
    }

    #[test]
    fn malformed_input_is_lexed() {
        let toks = tokenize_filter("'; return true; var x='");
        assert!(!toks.iter().any(|t| t.kind == Operator));
        let toks = tokenize_filter("|| 1==1 ; $where: sleep(100) >= <");
        assert!(toks.iter().any(|t| t.kind == Operator));
        assert!(toks.iter().any(|t| t.text == ">="));
        assert!(toks.iter().any(|t| t.text == "<"));
    }

    #[test]
    fn bare_dollar_rules() {
        assert_eq!(kinds(r#"{"$":1}"#)[1], BareDollar);
        assert_eq!(kinds(r#"{"$set":1}"#)[1], BareDollar);
        assert_eq!(kinds("{$gt: 1}")[1], Operator);
        assert_eq!(kinds("{a: $}")[3], BareDollar);
        // value-position strings stay literals even when they look like keywords
        assert_eq!(kinds(r#"{"a":"$ne"}"#)[3], StringLiteral);
    }

    #[test]
    fn reconstructs_input_without_whitespace() {
        let text = "{ \"a\" : { \"$in\" : [ 1, -2.5e3, 'x' ] }, b: true } ;;";
        let joined: String = tokenize_filter(text).iter().map(|t| t.text.as_str()).collect();
        let stripped: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        assert_eq!(joined, stripped);
    }

    #[test]
    fn ne_null_example() {
        let f = extract(r#"{"username":{"$ne":null}}"#);
        assert_eq!(f.op("$ne"), Some(true));
        assert!(f.null_operand);
        assert!(!f.regex_null_operand);
        assert!(f.selector_comparison);
        assert!(f.selector);
        assert!(f.all_operators);
        assert_eq!(f.query_length_raw, 25);
        assert_eq!(f.keywords_only, "{:{$ne:null}}");
        assert_eq!(f.query_length_keywords_only, 13);
    }

    #[test]
    fn empty_filter() {
        let f = extract("{}");
        assert!(f.op_flags.iter().all(|b| !b));
        assert!(!f.dollar && !f.selector && !f.all_operators && !f.null_operand);
        assert_eq!(f.query_length_raw, 2);
        assert_eq!(f.keywords_only, "{}");
    }

    #[test]
    fn keyword_is_not_symbol() {
        let f = extract(r#"{"a":{"$gt":""}}"#);
        assert_eq!(f.op("$gt"), Some(true));
        assert!(!f.cmp_gt);
    }

    #[test]
    fn where_keywords_only() {
        assert_eq!(keywords_only(r#"{"$where":"this.a > 1"}"#), "{$where:}");
        assert_eq!(keywords_only(r#"{"$where":"this.a > 1"}"#).chars().count(), 9);
    }

    #[test]
    fn quoted_keyword_values_survive_keywords_only() {
        let f = extract(r#"{"$gt": "$ne"}"#);
        assert_eq!(f.op("$gt"), Some(true));
        assert_eq!(f.op("$ne"), Some(false));
        assert_eq!(f.keywords_only, "{$gt:$ne}");
    }

    #[test]
    fn null_operand_tracks_owner() {
        assert!(!extract(r#"{"a":null}"#).null_operand);
        assert!(extract(r#"{"a":{"$in":[null,"x"]}}"#).null_operand);
        let f = extract(r#"{"a":{"$regex":null}}"#);
        assert!(f.null_operand && f.regex_null_operand);
        // field-owned null inside an operator's document
        assert!(!extract(r#"{"$or":[{"a":null}]}"#).null_operand);
    }

    #[test]
    fn categories() {
        let f = extract(r#"{"$or":[{"a":{"$exists":true}},{"b":{"$bitsAllSet":3}}],"$comment":"x","c":{"$slice":2}}"#);
        assert!(f.selector_logical && f.standard_logical);
        assert!(f.selector_element && f.selector_bitwise);
        assert!(f.misc && f.projection);
        assert!(!f.selector_comparison && !f.selector_array);
        let g = extract(r#"{"tags":{"$elemMatch":{"$eq":"x"}}}"#);
        assert!(g.selector_array && g.projection && g.selector_comparison);
        assert_eq!(g.op("$elemMatch"), Some(true));
        assert_eq!(g.op("$eq"), Some(true));
    }

    #[test]
    fn lengths_count_chars() {
        let f = extract(r#"{"name":"héllo"}"#);
        assert_eq!(f.query_length_raw, 16);
        assert_eq!(f.keywords_only, "{:}");
    }

    #[test]
    fn column_layout() {
        let f = extract(r#"{"a":{"$ne":1}}"#);
        let cols = f.columns();
        assert_eq!(cols.len(), FEATURE_COLUMNS.len());
        assert_eq!(cols[3], ("$ne", FeatureValue::Flag(true)));
        let json = f.to_json();
        assert_eq!(json["query_length_raw"], 15);
        assert_eq!(json["$"], false);
    }
}
