//! The line-oriented dialogue text format used in prompts.
//!
//! ```text
//! # Turn 3
//!     USER: "I am leaving on the 12th of this month. I need 1 ticket."
//!     ASSISTANT:
//!         - API CALL: FindBus(from_location='Vancouver', leaving_date='2019-03-12', to_location='Seattle', travelers='1')
//!         - Description: Find a bus journey for a given pair of cities
//!         - Required Arguments:
//!             * from_location: City where bus is leaving from; is_categorical: False
//!         - Optional Arguments:
//!             * travelers: Number of travelers for journey; is_categorical: True; Possible Values: ['1', '2']
//!         - RESULT:
//!              * {'fare': '29', 'leaving_time': '06:40'}
//!         - RESPONSE: "I found multiple options."
//! ```
//!
//! Turns are separated by one blank line and every rendered turn ends with a
//! newline, so `render_dialogue(d, k)` is a byte prefix of
//! `render_dialogue(d, k + 1)`. Text values are double-quoted with `\"`, `\\`,
//! `\n`, `\r` and `\t` escapes; argument and result values are single-quoted
//! with `\'` and `\\` escapes. The parser also accepts double-quoted values,
//! unquoted scalars, and tool blocks without the schema echo.

use super::{AssistantAction, Dialogue, DialogueError, ResultRow, SchemaPool, ToolArgSpec, ToolCall, ToolResult, ToolSchema, ToolTurn, Turn};

const USER_INDENT: &str = "    ";
const ITEM_INDENT: &str = "        ";
const SPEC_INDENT: &str = "            ";
const ROW_INDENT: &str = "             ";

/// Renders turns `1..=upto` of `d`.
pub fn render_dialogue(d: &Dialogue, upto: usize, pool: &SchemaPool) -> Result<String, DialogueError> {
    if upto == 0 || upto > d.len() {
        return Err(DialogueError::IndexOutOfRange { upto, len: d.len() });
    }
    let mut out = String::new();
    for (i, turn) in d.turns[..upto].iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&render_turn(turn, pool)?);
    }
    Ok(out)
}

/// Renders a single turn block, terminated by a newline.
pub fn render_turn(turn: &Turn, pool: &SchemaPool) -> Result<String, DialogueError> {
    let mut out = String::new();
    out.push_str(&format!("# Turn {}\n", turn.index));
    out.push_str(&format!("{USER_INDENT}USER: {}\n", quote_text(&turn.user)));
    match &turn.assistant {
        AssistantAction::Response { text } => {
            out.push_str(&format!("{USER_INDENT}ASSISTANT: {}\n", quote_text(text)));
        }
        AssistantAction::Tool(t) => {
            let schema = pool.lookup(&t.call.tool)?;
            out.push_str(&format!("{USER_INDENT}ASSISTANT:\n"));
            out.push_str(&format!("{ITEM_INDENT}- API CALL: {}\n", render_call(&t.call)));
            push_echo(&mut out, schema, ITEM_INDENT, SPEC_INDENT);
            match &t.result {
                ToolResult::Single(row) => {
                    out.push_str(&format!("{ITEM_INDENT}- RESULT: {}\n", render_row(row)));
                }
                ToolResult::Rows(rows) => {
                    out.push_str(&format!("{ITEM_INDENT}- RESULT:\n"));
                    for row in rows {
                        out.push_str(&format!("{ROW_INDENT}* {}\n", render_row(row)));
                    }
                }
            }
            out.push_str(&format!("{ITEM_INDENT}- RESPONSE: {}\n", quote_text(&t.response)));
        }
    }
    Ok(out)
}

/// The history an assistant sees at turn `k`: ground-truth turns `1..k` and
/// the user's `k`-th utterance.
pub fn teacher_forced_context(gt: &Dialogue, k: usize, pool: &SchemaPool) -> Result<String, DialogueError> {
    let turn = gt.turn(k).ok_or(DialogueError::IndexOutOfRange { upto: k, len: gt.len() })?;
    let mut out = if k > 1 { render_dialogue(gt, k - 1, pool)? + "\n" } else { String::new() };
    out.push_str(&format!("# Turn {k}\n{USER_INDENT}USER: {}\n", quote_text(&turn.user)));
    Ok(out)
}

/// Schema block used inside the critic's tool listing.
pub fn render_pool_entry(schema: &ToolSchema) -> String {
    let mut out = format!("- API: {}\n", schema.name);
    push_echo(&mut out, schema, "    ", "        ");
    out
}

fn push_echo(out: &mut String, schema: &ToolSchema, item: &str, spec: &str) {
    out.push_str(&format!("{item}- Description: {}\n", schema.description));
    out.push_str(&format!("{item}- Required Arguments:\n"));
    for a in &schema.required {
        out.push_str(&format!("{spec}* {}\n", render_arg_spec(a)));
    }
    out.push_str(&format!("{item}- Optional Arguments:\n"));
    for a in &schema.optional {
        out.push_str(&format!("{spec}* {}\n", render_arg_spec(a)));
    }
}

pub fn render_call(call: &ToolCall) -> String {
    let args: Vec<String> = call.args.iter().map(|(k, v)| format!("{k}={}", quote_value(v))).collect();
    format!("{}({})", call.tool, args.join(", "))
}

fn render_arg_spec(a: &ToolArgSpec) -> String {
    let mut s = format!("{}: {}; is_categorical: {}", a.name, a.description, if a.is_categorical { "True" } else { "False" });
    if !a.possible_values.is_empty() {
        let vals: Vec<String> = a.possible_values.iter().map(|v| quote_value(v)).collect();
        s.push_str(&format!("; Possible Values: [{}]", vals.join(", ")));
    }
    s
}

fn render_row(row: &ResultRow) -> String {
    let items: Vec<String> = row.iter().map(|(k, v)| format!("{}: {}", quote_value(k), quote_value(v))).collect();
    format!("{{{}}}", items.join(", "))
}

fn quote_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn quote_value(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Cursor<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self { lines: text.lines().collect(), pos: 0 }
    }

    fn skip_blank(&mut self) {
        while self.pos < self.lines.len() && self.lines[self.pos].trim().is_empty() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }

    /// 1-based number of the current line.
    fn line_no(&self) -> usize {
        self.pos + 1
    }

    fn next(&mut self) -> Option<&'a str> {
        let l = self.peek();
        if l.is_some() {
            self.pos += 1;
        }
        l
    }
}

/// Parses a whole dialogue. Turn headers must number turns `1..=N` in order.
pub fn parse_dialogue(id: &str, text: &str, pool: &SchemaPool) -> Result<Dialogue, DialogueError> {
    let mut cur = Cursor::new(text);
    let mut turns = Vec::new();
    loop {
        cur.skip_blank();
        if cur.peek().is_none() {
            break;
        }
        turns.push(parse_turn_at(&mut cur, Some(turns.len() + 1), pool)?);
    }
    if turns.is_empty() {
        return Err(DialogueError::syntax(cur.line_no(), "`# Turn 1`"));
    }
    Ok(Dialogue { id: id.to_string(), turns })
}

/// Parses a single turn block; the index is taken from its header.
pub fn parse_turn(text: &str, pool: &SchemaPool) -> Result<Turn, DialogueError> {
    let mut cur = Cursor::new(text);
    cur.skip_blank();
    let turn = parse_turn_at(&mut cur, None, pool)?;
    cur.skip_blank();
    if cur.peek().is_some() {
        return Err(DialogueError::syntax(cur.line_no(), "end of turn"));
    }
    Ok(turn)
}

fn parse_turn_at(cur: &mut Cursor<'_>, expected: Option<usize>, pool: &SchemaPool) -> Result<Turn, DialogueError> {
    let header_line = cur.line_no();
    let header = cur.next().unwrap_or_default().trim();
    let want = || match expected {
        Some(n) => format!("`# Turn {n}`"),
        None => "`# Turn <n>`".to_string(),
    };
    let index: usize = header
        .strip_prefix("# Turn")
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| DialogueError::syntax(header_line, want()))?;
    if expected.is_some_and(|n| n != index) || index == 0 {
        return Err(DialogueError::syntax(header_line, want()));
    }

    cur.skip_blank();
    let user_line = cur.line_no();
    let user = cur
        .next()
        .and_then(|l| l.trim_start().strip_prefix("USER:"))
        .ok_or_else(|| DialogueError::syntax(user_line, "`USER:`"))?;
    let user = parse_text_value(user, user_line)?;

    cur.skip_blank();
    let asst_line = cur.line_no();
    let rest = cur
        .next()
        .and_then(|l| l.trim_start().strip_prefix("ASSISTANT:"))
        .ok_or_else(|| DialogueError::syntax(asst_line, "`ASSISTANT:`"))?;
    let assistant = if rest.trim().is_empty() {
        AssistantAction::Tool(parse_tool_block(cur, asst_line, pool)?)
    } else {
        AssistantAction::Response { text: parse_text_value(rest, asst_line)? }
    };
    Ok(Turn { index, user, assistant })
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Required,
    Optional,
    Result,
}

fn parse_tool_block(cur: &mut Cursor<'_>, start_line: usize, pool: &SchemaPool) -> Result<ToolTurn, DialogueError> {
    let mut call = None;
    let mut description = None;
    let mut required: Option<Vec<ToolArgSpec>> = None;
    let mut optional: Option<Vec<ToolArgSpec>> = None;
    let mut result: Option<ToolResult> = None;
    let mut response = None;
    let mut section = Section::None;

    while let Some(line) = cur.peek() {
        let t = line.trim();
        if t.is_empty() || t.starts_with("# Turn") {
            break;
        }
        let ln = cur.line_no();
        cur.next();
        if let Some(rest) = t.strip_prefix("- API CALL:") {
            call = Some(parse_call(rest.trim()).map_err(|e| DialogueError::syntax(ln, e))?);
            section = Section::None;
        } else if let Some(rest) = t.strip_prefix("- Description:") {
            description = Some(rest.trim().to_string());
            section = Section::None;
        } else if t.starts_with("- Required Arguments:") {
            required = Some(Vec::new());
            section = Section::Required;
        } else if t.starts_with("- Optional Arguments:") {
            optional = Some(Vec::new());
            section = Section::Optional;
        } else if let Some(rest) = t.strip_prefix("- RESULT:") {
            let rest = rest.trim();
            if rest.is_empty() {
                result = Some(ToolResult::Rows(Vec::new()));
                section = Section::Result;
            } else {
                result = Some(ToolResult::Single(parse_row(rest).map_err(|e| DialogueError::syntax(ln, e))?));
                section = Section::None;
            }
        } else if let Some(rest) = t.strip_prefix("- RESPONSE:") {
            response = Some(parse_text_value(rest, ln)?);
            section = Section::None;
        } else if let Some(item) = t.strip_prefix("* ").or_else(|| (t == "*").then_some("")) {
            match section {
                Section::Required | Section::Optional => {
                    let spec = parse_arg_spec(item).map_err(|e| DialogueError::syntax(ln, e))?;
                    let list = if section == Section::Required { &mut required } else { &mut optional };
                    list.get_or_insert_with(Vec::new).push(spec);
                }
                Section::Result => {
                    let row = parse_row(item).map_err(|e| DialogueError::syntax(ln, e))?;
                    if let Some(ToolResult::Rows(rows)) = result.as_mut() {
                        rows.push(row);
                    }
                }
                Section::None => return Err(DialogueError::syntax(ln, "a `- ` field before list items")),
            }
        } else {
            return Err(DialogueError::syntax(ln, "a tool block field (`- API CALL:`, `- RESULT:`, `- RESPONSE:`, ...)"));
        }
    }

    let call = call.ok_or_else(|| DialogueError::syntax(start_line + 1, "`- API CALL:`"))?;
    let result = result.ok_or_else(|| DialogueError::syntax(cur.line_no(), "`- RESULT:`"))?;
    let response = response.ok_or_else(|| DialogueError::syntax(cur.line_no(), "`- RESPONSE:`"))?;

    let schema = pool.lookup(&call.tool)?;
    let mismatch = |detail: String| DialogueError::SchemaMismatch { tool: call.tool.clone(), detail };
    if let Some(desc) = description {
        if desc != schema.description {
            return Err(mismatch(format!("description {desc:?} != {:?}", schema.description)));
        }
    }
    if let Some(req) = required {
        if req != schema.required {
            return Err(mismatch("required argument list differs".into()));
        }
    }
    if let Some(opt) = optional {
        if opt != schema.optional {
            return Err(mismatch("optional argument list differs".into()));
        }
    }
    Ok(ToolTurn { call, result, response })
}

fn parse_text_value(raw: &str, line: usize) -> Result<String, DialogueError> {
    let s = raw.trim();
    if !s.starts_with('"') {
        return Ok(s.to_string());
    }
    let mut chars = s.chars().peekable();
    let value = read_quoted(&mut chars).map_err(|e| DialogueError::syntax(line, e))?;
    if chars.any(|c| !c.is_whitespace()) {
        return Err(DialogueError::syntax(line, "end of line after closing quote"));
    }
    Ok(value)
}

type Chars<'a> = std::iter::Peekable<std::str::Chars<'a>>;

fn skip_ws(chars: &mut Chars<'_>) {
    while chars.peek().is_some_and(|c| c.is_whitespace()) {
        chars.next();
    }
}

/// Reads a quoted string; the next char must be the opening `'` or `"`.
fn read_quoted(chars: &mut Chars<'_>) -> Result<String, String> {
    let quote = match chars.next() {
        Some(q @ ('\'' | '"')) => q,
        _ => return Err("opening quote".into()),
    };
    let mut out = String::new();
    loop {
        match chars.next() {
            None => return Err(format!("closing {quote}")),
            Some(c) if c == quote => return Ok(out),
            Some('\\') => match chars.next() {
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                Some('t') => out.push('\t'),
                Some(c @ ('\\' | '\'' | '"')) => out.push(c),
                Some(c) => {
                    out.push('\\');
                    out.push(c);
                }
                None => return Err(format!("closing {quote}")),
            },
            Some(c) => out.push(c),
        }
    }
}

/// Reads a quoted string or a bare scalar terminated by one of `stops`.
fn read_value(chars: &mut Chars<'_>, stops: &[char]) -> Result<String, String> {
    skip_ws(chars);
    match chars.peek() {
        Some('\'' | '"') => read_quoted(chars),
        _ => {
            let mut out = String::new();
            while let Some(&c) = chars.peek() {
                if stops.contains(&c) {
                    break;
                }
                out.push(c);
                chars.next();
            }
            let v = out.trim().to_string();
            if v.is_empty() {
                Err("a value".into())
            } else {
                Ok(v)
            }
        }
    }
}

/// Parses `Tool(arg='value', ...)`.
pub fn parse_call(s: &str) -> Result<ToolCall, String> {
    let open = s.find('(').ok_or("`(` after tool name")?;
    let name = s[..open].trim();
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.') {
        return Err("a tool name".into());
    }
    let mut call = ToolCall::new(name);
    let mut chars = s[open + 1..].chars().peekable();
    skip_ws(&mut chars);
    if chars.peek() == Some(&')') {
        chars.next();
    } else {
        loop {
            skip_ws(&mut chars);
            let mut key = String::new();
            while let Some(&c) = chars.peek() {
                if c == '=' {
                    break;
                }
                key.push(c);
                chars.next();
            }
            if chars.next() != Some('=') {
                return Err("`=` after argument name".into());
            }
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err("an argument name".into());
            }
            let value = read_value(&mut chars, &[',', ')'])?;
            call.args.insert(key, value);
            skip_ws(&mut chars);
            match chars.next() {
                Some(',') => continue,
                Some(')') => break,
                _ => return Err("`,` or `)` in argument list".into()),
            }
        }
    }
    if chars.any(|c| !c.is_whitespace()) {
        return Err("end of call after `)`".into());
    }
    Ok(call)
}

fn parse_row(s: &str) -> Result<ResultRow, String> {
    let mut chars = s.trim().chars().peekable();
    if chars.next() != Some('{') {
        return Err("`{` starting a result record".into());
    }
    let mut row = ResultRow::new();
    skip_ws(&mut chars);
    if chars.peek() == Some(&'}') {
        chars.next();
    } else {
        loop {
            let key = read_value(&mut chars, &[':'])?;
            skip_ws(&mut chars);
            if chars.next() != Some(':') {
                return Err("`:` after result key".into());
            }
            let value = read_value(&mut chars, &[',', '}'])?;
            row.insert(key, value);
            skip_ws(&mut chars);
            match chars.next() {
                Some(',') => continue,
                Some('}') => break,
                _ => return Err("`,` or `}` in result record".into()),
            }
        }
    }
    if chars.any(|c| !c.is_whitespace()) {
        return Err("end of record after `}`".into());
    }
    Ok(row)
}

fn parse_arg_spec(s: &str) -> Result<ToolArgSpec, String> {
    const MARK: &str = "; is_categorical: ";
    let at = s.rfind(MARK).ok_or("`; is_categorical:` in argument spec")?;
    let (head, tail) = (&s[..at], &s[at + MARK.len()..]);
    let (name, description) = head.split_once(':').ok_or("`name: description` in argument spec")?;
    let description = description.strip_prefix(' ').unwrap_or(description);
    let (flag, values) = match tail.split_once(';') {
        Some((f, v)) => (f.trim(), Some(v.trim())),
        None => (tail.trim(), None),
    };
    let is_categorical = match flag {
        "True" => true,
        "False" => false,
        _ => return Err("`True` or `False` after is_categorical".into()),
    };
    let possible_values = match values {
        None => Vec::new(),
        Some(v) => {
            let list = v.strip_prefix("Possible Values:").ok_or("`Possible Values:`")?.trim();
            parse_value_list(list)?
        }
    };
    Ok(ToolArgSpec { name: name.trim().to_string(), description: description.to_string(), is_categorical, possible_values })
}

fn parse_value_list(s: &str) -> Result<Vec<String>, String> {
    let mut chars = s.chars().peekable();
    if chars.next() != Some('[') {
        return Err("`[` starting a value list".into());
    }
    let mut out = Vec::new();
    skip_ws(&mut chars);
    if chars.peek() == Some(&']') {
        chars.next();
        return Ok(out);
    }
    loop {
        out.push(read_value(&mut chars, &[',', ']'])?);
        skip_ws(&mut chars);
        match chars.next() {
            Some(',') => continue,
            Some(']') => return Ok(out),
            _ => return Err("`,` or `]` in value list".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bus_pool() -> SchemaPool {
        let mut pool = SchemaPool::new();
        pool.insert(ToolSchema {
            name: "FindBus".into(),
            description: "Find a bus journey for a given pair of cities".into(),
            required: vec![
                ToolArgSpec::free("from_location", "City where bus is leaving from"),
                ToolArgSpec::free("to_location", "City where bus is going to"),
                ToolArgSpec::free("leaving_date", "Date of bus leaving for journey"),
            ],
            optional: vec![ToolArgSpec::categorical("travelers", "Number of travelers for journey", ["1", "2", "3", "4", "5"])],
            is_action: false,
            domain: None,
        });
        pool
    }

    #[test]
    fn minimal_single_turn() {
        let d = parse_dialogue("x", "# Turn 1\n    USER: \"hi\"\n    ASSISTANT: \"hello\"\n", &SchemaPool::new()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.turns[0].assistant, AssistantAction::response("hello"));
    }

    #[test]
    fn call_round_trip_with_escapes() {
        let call = ToolCall::new("F").arg("name", "McDonald's \\ \"x\"").arg("n", "1");
        assert_eq!(parse_call(&render_call(&call)).unwrap(), call);
        assert_eq!(render_call(&ToolCall::new("G")), "G()");
        assert_eq!(parse_call("G()").unwrap(), ToolCall::new("G"));
    }

    #[test]
    fn lenient_call_values() {
        let c = parse_call("AddAlarm(name=\"Class alarm\", time=18)").unwrap();
        assert_eq!(c.args["name"], "Class alarm");
        assert_eq!(c.args["time"], "18");
        assert!(parse_call("AddAlarm(name='x'").is_err());
        assert!(parse_call("(x='1')").is_err());
    }

    #[test]
    fn rows_accept_json_quotes() {
        let row = parse_row(r#"{"fare": "29", "leaving_time": "06:40"}"#).unwrap();
        assert_eq!(row["fare"], "29");
        assert!(parse_row("{}").unwrap().is_empty());
        assert!(parse_row("{'a' 'b'}").is_err());
    }

    #[test]
    fn arg_spec_parsing() {
        let a = parse_arg_spec("travelers: Number of travelers; is_categorical: True; Possible Values: ['1', '2']").unwrap();
        assert!(a.is_categorical);
        assert_eq!(a.possible_values, vec!["1", "2"]);
        let b = parse_arg_spec("from_location: City; where; is_categorical: False").unwrap();
        assert_eq!(b.description, "City; where");
        assert!(!b.is_categorical);
    }

    #[test]
    fn echo_mismatch_detected() {
        let text = "# Turn 1\n    USER: \"a\"\n    ASSISTANT:\n        - API CALL: FindBus(from_location='V')\n        - Description: Something else\n        - RESULT:\n        - RESPONSE: \"r\"\n";
        assert!(matches!(parse_dialogue("x", text, &bus_pool()), Err(DialogueError::SchemaMismatch { .. })));
    }

    #[test]
    fn unknown_tool_reported() {
        let text = "# Turn 1\n    USER: \"a\"\n    ASSISTANT:\n        - API CALL: Nope()\n        - RESULT:\n        - RESPONSE: \"r\"\n";
        assert_eq!(parse_dialogue("x", text, &bus_pool()), Err(DialogueError::UnknownTool("Nope".into())));
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = parse_dialogue("x", "# Turn 2\n    USER: \"a\"\n    ASSISTANT: \"b\"\n", &SchemaPool::new()).unwrap_err();
        assert_eq!(err, DialogueError::Syntax { line: 1, expected: "`# Turn 1`".into() });
        let err = parse_dialogue("x", "# Turn 1\n    USR: \"a\"\n", &SchemaPool::new()).unwrap_err();
        assert!(matches!(err, DialogueError::Syntax { line: 2, .. }));
        assert!(parse_dialogue("x", "\n\n", &SchemaPool::new()).is_err());
    }

    #[test]
    fn block_without_echo_parses() {
        let text = "# Turn 1\n    USER: \"a\"\n    ASSISTANT:\n        - API CALL: FindBus(from_location='Vancouver', leaving_date='2019-03-12', to_location='Seattle')\n        - RESULT:\n            * {\"fare\": \"29\"}\n        - RESPONSE: \"r\"\n";
        let d = parse_dialogue("x", text, &bus_pool()).unwrap();
        let t = d.turns[0].assistant.tool_turn().unwrap();
        assert_eq!(t.result, ToolResult::Rows(vec![[("fare".to_string(), "29".to_string())].into()]));
    }

    #[test]
    fn teacher_forced_context_is_prefix_plus_user() {
        let d = Dialogue::from_pairs(
            "x",
            [("a", AssistantAction::response("b")), ("c", AssistantAction::response("d"))],
        );
        let pool = SchemaPool::new();
        let ctx = teacher_forced_context(&d, 2, &pool).unwrap();
        let full = render_dialogue(&d, 1, &pool).unwrap();
        assert!(ctx.starts_with(&full));
        assert!(ctx.ends_with("# Turn 2\n    USER: \"c\"\n"));
        assert_eq!(teacher_forced_context(&d, 1, &pool).unwrap(), "# Turn 1\n    USER: \"a\"\n");
    }
}
