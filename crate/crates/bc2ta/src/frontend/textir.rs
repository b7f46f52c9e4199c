//! The `.jbct` textual IR: a line-oriented transcription of bytecode
//! control flow, one class per block.
//!
//! ```text
//! class Main extends java/lang/Object {
//!     method main([Ljava/lang/String;)V static {
//!         0: new @line 6
//!         3: ifeq 9 @line 6
//!         ...
//!     }
//! }
//! ```
//!
//! Branch operands are absolute decimal offsets (comma-separated for
//! switches); invoke operands are `Owner.name(descriptor)` with the
//! dispatch given by the mnemonic itself. Other operands are accepted and
//! ignored, since they do not affect control flow. `//` starts a comment.

use super::opcodes;
use super::{
    split_name_descriptor, Dispatch, FrontendError, InstrKind, InvokeRef, RawClass,
    RawInstruction, RawMethod,
};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Parses a `.jbct` document into its classes.
pub fn parse_text_ir(text: &str) -> Result<Vec<RawClass>, FrontendError> {
    let tokens = tokenize(text);
    let mut p = Parser { tokens, pos: 0 };
    let mut classes = Vec::new();
    while !p.at_end() {
        classes.push(p.class()?);
    }
    Ok(classes)
}

/// Pretty-prints classes back to the textual IR. `parse_text_ir` of the
/// result reproduces the input classes structurally.
pub fn render_text_ir(classes: &[RawClass]) -> String {
    let mut out = String::new();
    for class in classes {
        let _ = write!(out, "class {}", class.name);
        if let Some(s) = &class.super_name {
            let _ = write!(out, " extends {s}");
        }
        for iface in &class.interfaces {
            let _ = write!(out, " implements {iface}");
        }
        if class.is_interface {
            out.push_str(" interface");
        }
        out.push_str(" {\n");
        for m in &class.methods {
            let _ = write!(out, "    method {}{}", m.name, m.descriptor);
            if m.is_static {
                out.push_str(" static");
            }
            if m.is_abstract {
                out.push_str(" abstract");
            }
            out.push_str(" {\n");
            for ins in &m.instructions {
                let _ = write!(out, "        {}: {}", ins.offset, ins.mnemonic);
                if let Some(r) = &ins.invoke_ref {
                    let _ = write!(out, " {}.{}{}", r.owner, r.name, r.descriptor);
                } else if !ins.branch_targets.is_empty() {
                    let targets: Vec<String> =
                        ins.branch_targets.iter().map(u32::to_string).collect();
                    let _ = write!(out, " {}", targets.join(","));
                }
                if ins.line != 0 {
                    let _ = write!(out, " @line {}", ins.line);
                }
                out.push('\n');
            }
            out.push_str("    }\n");
        }
        out.push_str("}\n");
    }
    out
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = match line.find("//") {
            Some(i) => &line[..i],
            None => line,
        };
        let mut col = 0;
        let mut chars = body.char_indices().peekable();
        while let Some(&(i, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
                continue;
            }
            if c == '{' || c == '}' {
                tokens.push(Token {
                    text: c.to_string(),
                    line: lineno + 1,
                    col: i + 1,
                });
                chars.next();
                continue;
            }
            col = i + 1;
            let mut word = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_whitespace() || c == '{' || c == '}' {
                    break;
                }
                word.push(c);
                chars.next();
            }
            tokens.push(Token {
                text: word,
                line: lineno + 1,
                col,
            });
        }
    }
    tokens
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<Token, FrontendError> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.err_at_end("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, text: &str) -> Result<(), FrontendError> {
        let t = self.next()?;
        if t.text != text {
            return Err(syntax(&t, format!("expected `{text}`, found `{}`", t.text)));
        }
        Ok(())
    }

    fn err_at_end(&self, msg: &str) -> FrontendError {
        let (line, col) = self
            .tokens
            .last()
            .map(|t| (t.line, t.col + t.text.len()))
            .unwrap_or((1, 1));
        FrontendError::Syntax {
            line,
            col,
            message: msg.to_string(),
        }
    }

    fn class(&mut self) -> Result<RawClass, FrontendError> {
        self.expect("class")?;
        let name_tok = self.next()?;
        let name = name_tok.text.clone();
        if name.is_empty() || name == "{" {
            return Err(syntax(&name_tok, "missing class name".into()));
        }
        let mut super_name = None;
        let mut interfaces = Vec::new();
        let mut is_interface = false;
        loop {
            let t = self.next()?;
            match t.text.as_str() {
                "extends" => super_name = Some(self.next()?.text),
                "implements" => interfaces.push(self.next()?.text),
                "interface" => is_interface = true,
                "{" => break,
                other => {
                    return Err(syntax(
                        &t,
                        format!("expected `extends`, `implements`, `interface` or `{{`, found `{other}`"),
                    ))
                }
            }
        }
        let mut methods: Vec<RawMethod> = Vec::new();
        loop {
            let t = self.next()?;
            match t.text.as_str() {
                "}" => break,
                "method" => {
                    let m = self.method()?;
                    if methods
                        .iter()
                        .any(|e| e.name == m.name && e.descriptor == m.descriptor)
                    {
                        return Err(syntax(
                            &t,
                            format!("duplicate method {}{} in class {name}", m.name, m.descriptor),
                        ));
                    }
                    methods.push(m);
                }
                other => {
                    return Err(syntax(&t, format!("expected `method` or `}}`, found `{other}`")))
                }
            }
        }
        Ok(RawClass {
            name,
            super_name,
            interfaces,
            methods,
            is_interface,
        })
    }

    fn method(&mut self) -> Result<RawMethod, FrontendError> {
        let sig_tok = self.next()?;
        let (name, descriptor) = split_name_descriptor(&sig_tok.text)
            .ok_or_else(|| syntax(&sig_tok, format!("invalid method signature `{}`", sig_tok.text)))?;
        let (name, descriptor) = (name.to_string(), descriptor.to_string());
        let mut is_static = false;
        let mut is_abstract = false;
        loop {
            let t = self.next()?;
            match t.text.as_str() {
                "static" => is_static = true,
                "abstract" => is_abstract = true,
                "{" => break,
                other => {
                    return Err(syntax(
                        &t,
                        format!("expected `static`, `abstract` or `{{`, found `{other}`"),
                    ))
                }
            }
        }
        let mut instructions: Vec<RawInstruction> = Vec::new();
        loop {
            let t = self.next()?;
            if t.text == "}" {
                break;
            }
            let offset_text = t.text.strip_suffix(':').ok_or_else(|| {
                syntax(&t, format!("expected `<offset>:` or `}}`, found `{}`", t.text))
            })?;
            let offset: u32 = offset_text
                .parse()
                .map_err(|_| syntax(&t, format!("invalid offset `{offset_text}`")))?;
            if let Some(prev) = instructions.last() {
                if prev.offset == offset {
                    return Err(FrontendError::DuplicateOffset {
                        method: name.clone(),
                        offset,
                    });
                }
                if prev.offset > offset {
                    return Err(syntax(&t, format!("offset {offset} not increasing")));
                }
            }
            let ins = self.instruction(offset, &t)?;
            instructions.push(ins);
        }
        if is_abstract && !instructions.is_empty() {
            return Err(self.err_at_end("abstract method with instructions"));
        }
        let line_table = change_points(&instructions);
        let m = RawMethod {
            name,
            descriptor,
            is_static,
            is_abstract,
            instructions,
            line_table,
        };
        // Branch-target closure; offsets were checked incrementally.
        m.validate()?;
        Ok(m)
    }

    fn instruction(&mut self, offset: u32, at: &Token) -> Result<RawInstruction, FrontendError> {
        let mn_tok = self.next()?;
        let mnemonic = mn_tok.text.clone();
        let (kind, supported) = match mnemonic.as_str() {
            // Pseudo-op for synthetic models: a successor-less non-return.
            "halt" => (InstrKind::Terminal, true),
            other => match opcodes::by_mnemonic(other) {
                Some(info) => (info.kind, info.supported),
                None => return Err(syntax(&mn_tok, format!("unknown mnemonic `{other}`"))),
            },
        };
        if !supported {
            return Err(syntax(&mn_tok, format!("unsupported mnemonic `{mnemonic}`")));
        }

        let mut operand_tokens: Vec<Token> = Vec::new();
        let mut line = 0u32;
        loop {
            match self.peek() {
                None => break,
                Some(t) if t.text == "}" || t.text.ends_with(':') => break,
                Some(t) if t.text == "@line" => {
                    self.next()?;
                    let lt = self.next()?;
                    line = lt
                        .text
                        .parse()
                        .map_err(|_| syntax(&lt, format!("invalid line number `{}`", lt.text)))?;
                    break;
                }
                Some(_) => operand_tokens.push(self.next()?),
            }
        }

        let mut branch_targets = Vec::new();
        let mut invoke_ref = None;
        match kind {
            InstrKind::CondBranch | InstrKind::Goto => {
                let t = operand_tokens
                    .first()
                    .ok_or_else(|| syntax(at, format!("`{mnemonic}` needs a target offset")))?;
                branch_targets.push(
                    t.text
                        .parse()
                        .map_err(|_| syntax(t, format!("invalid branch target `{}`", t.text)))?,
                );
            }
            InstrKind::Switch => {
                let t = operand_tokens
                    .first()
                    .ok_or_else(|| syntax(at, format!("`{mnemonic}` needs target offsets")))?;
                for part in t.text.split(',') {
                    branch_targets.push(
                        part.parse()
                            .map_err(|_| syntax(t, format!("invalid switch target `{part}`")))?,
                    );
                }
            }
            InstrKind::Invoke => {
                let dispatch = match mnemonic.as_str() {
                    "invokestatic" => Dispatch::Static,
                    "invokevirtual" => Dispatch::Virtual,
                    "invokespecial" => Dispatch::Special,
                    _ => Dispatch::Interface,
                };
                let t = operand_tokens
                    .first()
                    .ok_or_else(|| syntax(at, format!("`{mnemonic}` needs an Owner.name(desc) operand")))?;
                invoke_ref = Some(parse_invoke_operand(&t.text, dispatch).ok_or_else(|| {
                    syntax(t, format!("invalid invoke operand `{}`", t.text))
                })?);
            }
            // Non-flow operands (iinc counts, constants, type names) are
            // accepted and dropped.
            _ => {}
        }

        Ok(RawInstruction {
            offset,
            mnemonic,
            kind,
            branch_targets,
            invoke_ref,
            line,
        })
    }
}

fn parse_invoke_operand(text: &str, dispatch: Dispatch) -> Option<InvokeRef> {
    let paren = text.find('(')?;
    let dot = text[..paren].rfind('.')?;
    let owner = &text[..dot];
    let (name, descriptor) = split_name_descriptor(&text[dot + 1..])?;
    if owner.is_empty() {
        return None;
    }
    Some(InvokeRef {
        owner: owner.to_string(),
        name: name.to_string(),
        descriptor: descriptor.to_string(),
        dispatch,
    })
}

/// Line table as change points of the per-instruction line sequence. Both
/// parsers use this normal form, which makes render/parse round trips
/// structural identities.
pub(crate) fn change_points(instructions: &[RawInstruction]) -> BTreeMap<u32, u32> {
    let mut table = BTreeMap::new();
    let mut prev = 0u32;
    for ins in instructions {
        if ins.line != prev {
            table.insert(ins.offset, ins.line);
            prev = ins.line;
        }
    }
    table
}

fn syntax(t: &Token, message: String) -> FrontendError {
    FrontendError::Syntax {
        line: t.line,
        col: t.col,
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_one_instruction_class() {
        let classes = parse_text_ir("class A { method m()V { 0: return @line 1 } }").unwrap();
        assert_eq!(classes.len(), 1);
        let m = &classes[0].methods[0];
        assert_eq!(m.instructions.len(), 1);
        assert_eq!(m.instructions[0].kind, InstrKind::Return);
        assert_eq!(m.instructions[0].line, 1);
    }

    #[test]
    fn dangling_branch_target_is_rejected() {
        let err = parse_text_ir("class A { method m()V { 0: ifeq 99 3: return } }").unwrap_err();
        assert!(matches!(err, FrontendError::DanglingBranchTarget { target: 99, .. }));
    }

    #[test]
    fn duplicate_offset_is_rejected() {
        let err = parse_text_ir("class A { method m()V { 0: nop 0: return } }").unwrap_err();
        assert!(matches!(err, FrontendError::DuplicateOffset { offset: 0, .. }));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_text_ir("class A {\n  method m()V {\n    0: bogus\n  }\n}").unwrap_err();
        match err {
            FrontendError::Syntax { line, col, .. } => {
                assert_eq!(line, 3);
                assert!(col >= 8);
            }
            other => panic!("expected syntax error, got {other}"),
        }
    }

    #[test]
    fn invoke_operands_resolve_owner_name_descriptor() {
        let classes = parse_text_ir(
            "class A { method m()V { 0: invokevirtual p/q/Owner.f(I)Z 3: return } }",
        )
        .unwrap();
        let r = classes[0].methods[0].instructions[0].invoke_ref.as_ref().unwrap();
        assert_eq!(r.owner, "p/q/Owner");
        assert_eq!(r.name, "f");
        assert_eq!(r.descriptor, "(I)Z");
        assert_eq!(r.dispatch, Dispatch::Virtual);
    }

    #[test]
    fn comments_and_ignored_operands() {
        let text = "class A { // comment\n method m()V { 0: iinc 1 1 // bump\n 3: return } }";
        let classes = parse_text_ir(text).unwrap();
        assert_eq!(classes[0].methods[0].instructions.len(), 2);
    }

    #[test]
    fn render_parse_round_trip_on_classfile_output() {
        for bytes in [
            crate::synth::fig2_main_class_bytes(),
            crate::synth::fig2_math_class_bytes(),
        ] {
            let parsed = crate::frontend::parse_class_file(&bytes).unwrap();
            let rendered = render_text_ir(std::slice::from_ref(&parsed));
            let reparsed = parse_text_ir(&rendered).unwrap();
            assert_eq!(reparsed, vec![parsed]);
        }
    }

    #[test]
    fn switch_targets_round_trip() {
        let text = "class S { method m()V { 0: lookupswitch 12,14,16 @line 1 12: nop 14: nop 16: return } }";
        let classes = parse_text_ir(text).unwrap();
        let ins = &classes[0].methods[0].instructions[0];
        assert_eq!(ins.branch_targets, vec![12, 14, 16]);
        let round = parse_text_ir(&render_text_ir(&classes)).unwrap();
        assert_eq!(round, classes);
    }
}
