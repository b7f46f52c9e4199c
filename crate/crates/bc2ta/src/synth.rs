//! Synthetic inputs: a programmatic class-file writer and a scale
//! generator for large text-IR projects.
//!
//! The writer keeps binary fixtures hermetic (no Java compiler needed);
//! the generator produces projects of tens of thousands of instructions
//! for the scalability tests and benchmarks.

use crate::frontend::Dispatch;
use std::collections::HashMap;
use std::fmt::Write as _;

const ACC_PUBLIC: u16 = 0x0001;
const ACC_STATIC: u16 = 0x0008;
const ACC_SUPER: u16 = 0x0020;
const ACC_INTERFACE: u16 = 0x0200;
const ACC_ABSTRACT: u16 = 0x0400;

/// Assembles one class file in memory.
pub struct ClassFileBuilder {
    name: String,
    super_name: Option<String>,
    interfaces: Vec<String>,
    access: u16,
    pool: PoolBuilder,
    methods: Vec<MethodEntry>,
}

struct MethodEntry {
    access: u16,
    name: String,
    descriptor: String,
    code: Option<(Vec<u8>, Vec<(u16, u16)>)>,
}

impl ClassFileBuilder {
    pub fn new(name: &str, super_name: Option<&str>) -> Self {
        ClassFileBuilder {
            name: name.to_string(),
            super_name: super_name.map(str::to_string),
            interfaces: Vec::new(),
            access: ACC_PUBLIC | ACC_SUPER,
            pool: PoolBuilder::default(),
            methods: Vec::new(),
        }
    }

    pub fn set_interface(&mut self) {
        self.access = ACC_PUBLIC | ACC_INTERFACE | ACC_ABSTRACT;
    }

    pub fn add_interface(&mut self, name: &str) {
        self.interfaces.push(name.to_string());
    }

    /// `public <init>()V { aload_0; invokespecial super.<init>; return }`
    pub fn default_constructor(&mut self, line: u16) {
        let super_name = self.super_name.clone().unwrap_or_else(|| "java/lang/Object".into());
        self.method_with("<init>", "()V", false, |a| {
            a.line(line);
            a.op(0x2a); // aload_0
            a.invoke(Dispatch::Special, &super_name, "<init>", "()V");
            a.op(0xb1); // return
        });
    }

    pub fn abstract_method(&mut self, name: &str, descriptor: &str) {
        self.methods.push(MethodEntry {
            access: ACC_PUBLIC | ACC_ABSTRACT,
            name: name.to_string(),
            descriptor: descriptor.to_string(),
            code: None,
        });
    }

    /// Assembles a method body through the [`Asm`] helper.
    pub fn method_with(
        &mut self,
        name: &str,
        descriptor: &str,
        is_static: bool,
        build: impl FnOnce(&mut Asm),
    ) {
        let mut asm = Asm {
            code: Vec::new(),
            lines: Vec::new(),
            pool: &mut self.pool,
        };
        build(&mut asm);
        let access = ACC_PUBLIC | if is_static { ACC_STATIC } else { 0 };
        self.methods.push(MethodEntry {
            access,
            name: name.to_string(),
            descriptor: descriptor.to_string(),
            code: Some((asm.code, asm.lines)),
        });
    }

    /// Raw byte-level method: `(opcode, operand bytes)` pairs plus a line
    /// table. Operands are written verbatim.
    pub fn raw_method(
        &mut self,
        name: &str,
        descriptor: &str,
        is_static: bool,
        ops: &[(u8, Vec<u8>)],
        lines: &[(u16, u16)],
    ) {
        let mut code = Vec::new();
        for (opcode, operands) in ops {
            code.push(*opcode);
            code.extend_from_slice(operands);
        }
        let access = ACC_PUBLIC | if is_static { ACC_STATIC } else { 0 };
        self.methods.push(MethodEntry {
            access,
            name: name.to_string(),
            descriptor: descriptor.to_string(),
            code: Some((code, lines.to_vec())),
        });
    }

    /// Method whose single instruction is the given invoke opcode aimed at
    /// `java/lang/Object.hashCode()I`.
    pub fn one_opcode_invoke_method(&mut self, opcode: u8) {
        let interface = opcode == 0xb9;
        let idx = self
            .pool
            .methodref("java/lang/Object", "hashCode", "()I", interface);
        let mut code = vec![opcode, (idx >> 8) as u8, idx as u8];
        if interface {
            code.extend_from_slice(&[1, 0]);
        }
        self.methods.push(MethodEntry {
            access: ACC_PUBLIC | ACC_STATIC,
            name: "m".into(),
            descriptor: "()V".into(),
            code: Some((code, Vec::new())),
        });
    }

    /// Method whose single instruction carries a 16-bit constant-pool
    /// operand (new, checkcast, field access, ldc_w family).
    pub fn one_opcode_cp16_method(&mut self, opcode: u8) {
        let idx = self.pool.class("java/lang/Object");
        self.raw_method("m", "()V", true, &[(opcode, vec![(idx >> 8) as u8, idx as u8])], &[]);
    }

    /// `multianewarray` with one dimension byte.
    pub fn one_opcode_cp16u8_method(&mut self, opcode: u8) {
        let idx = self.pool.class("java/lang/Object");
        self.raw_method(
            "m",
            "()V",
            true,
            &[(opcode, vec![(idx >> 8) as u8, idx as u8, 1])],
            &[],
        );
    }

    /// A one-entry tableswitch whose targets are the switch itself.
    pub fn tableswitch_method(&mut self) {
        // opcode at 0; pad to offset 4; default, low, high, one jump.
        let mut code = vec![0xaa, 0, 0, 0];
        code.extend_from_slice(&0i32.to_be_bytes()); // default -> 0
        code.extend_from_slice(&0i32.to_be_bytes()); // low
        code.extend_from_slice(&0i32.to_be_bytes()); // high
        code.extend_from_slice(&0i32.to_be_bytes()); // case 0 -> 0
        self.raw_method_from_code("m", "()V", code);
    }

    /// A one-pair lookupswitch whose targets are the switch itself.
    pub fn lookupswitch_method(&mut self) {
        let mut code = vec![0xab, 0, 0, 0];
        code.extend_from_slice(&0i32.to_be_bytes()); // default -> 0
        code.extend_from_slice(&1i32.to_be_bytes()); // npairs
        code.extend_from_slice(&0i32.to_be_bytes()); // match
        code.extend_from_slice(&0i32.to_be_bytes()); // offset -> 0
        self.raw_method_from_code("m", "()V", code);
    }

    fn raw_method_from_code(&mut self, name: &str, descriptor: &str, code: Vec<u8>) {
        self.methods.push(MethodEntry {
            access: ACC_PUBLIC | ACC_STATIC,
            name: name.into(),
            descriptor: descriptor.into(),
            code: Some((code, Vec::new())),
        });
    }

    /// Serializes the class file.
    pub fn build(&mut self) -> Vec<u8> {
        let this_idx = self.pool.class(&self.name);
        let super_idx = match &self.super_name {
            Some(s) => {
                let s = s.clone();
                self.pool.class(&s)
            }
            None => 0,
        };
        let iface_idx: Vec<u16> = {
            let names = self.interfaces.clone();
            names.iter().map(|n| self.pool.class(n)).collect()
        };
        let code_attr_idx = if self.methods.iter().any(|m| m.code.is_some()) {
            self.pool.utf8("Code")
        } else {
            0
        };
        let lnt_attr_idx = if self.methods.iter().any(|m| {
            m.code.as_ref().map(|(_, l)| !l.is_empty()).unwrap_or(false)
        }) {
            self.pool.utf8("LineNumberTable")
        } else {
            0
        };
        let method_meta: Vec<(u16, u16)> = self
            .methods
            .iter()
            .map(|m| (m.name.clone(), m.descriptor.clone()))
            .collect::<Vec<_>>()
            .into_iter()
            .map(|(n, d)| (self.pool.utf8(&n), self.pool.utf8(&d)))
            .collect();

        let mut out = Vec::new();
        out.extend_from_slice(&0xCAFE_BABEu32.to_be_bytes());
        out.extend_from_slice(&0u16.to_be_bytes()); // minor
        out.extend_from_slice(&52u16.to_be_bytes()); // major: Java 8
        self.pool.write(&mut out);
        out.extend_from_slice(&self.access.to_be_bytes());
        out.extend_from_slice(&this_idx.to_be_bytes());
        out.extend_from_slice(&super_idx.to_be_bytes());
        out.extend_from_slice(&(iface_idx.len() as u16).to_be_bytes());
        for idx in iface_idx {
            out.extend_from_slice(&idx.to_be_bytes());
        }
        out.extend_from_slice(&0u16.to_be_bytes()); // fields
        out.extend_from_slice(&(self.methods.len() as u16).to_be_bytes());
        for (m, (name_idx, desc_idx)) in self.methods.iter().zip(method_meta) {
            out.extend_from_slice(&m.access.to_be_bytes());
            out.extend_from_slice(&name_idx.to_be_bytes());
            out.extend_from_slice(&desc_idx.to_be_bytes());
            match &m.code {
                None => out.extend_from_slice(&0u16.to_be_bytes()),
                Some((code, lines)) => {
                    out.extend_from_slice(&1u16.to_be_bytes());
                    out.extend_from_slice(&code_attr_idx.to_be_bytes());
                    let lnt_len = if lines.is_empty() { 0 } else { 8 + 4 * lines.len() };
                    let attr_len = 12 + code.len() + lnt_len;
                    out.extend_from_slice(&(attr_len as u32).to_be_bytes());
                    out.extend_from_slice(&16u16.to_be_bytes()); // max_stack
                    out.extend_from_slice(&16u16.to_be_bytes()); // max_locals
                    out.extend_from_slice(&(code.len() as u32).to_be_bytes());
                    out.extend_from_slice(code);
                    out.extend_from_slice(&0u16.to_be_bytes()); // exception table
                    if lines.is_empty() {
                        out.extend_from_slice(&0u16.to_be_bytes()); // code attrs
                    } else {
                        out.extend_from_slice(&1u16.to_be_bytes());
                        out.extend_from_slice(&lnt_attr_idx.to_be_bytes());
                        out.extend_from_slice(&((2 + 4 * lines.len()) as u32).to_be_bytes());
                        out.extend_from_slice(&(lines.len() as u16).to_be_bytes());
                        for (pc, line) in lines {
                            out.extend_from_slice(&pc.to_be_bytes());
                            out.extend_from_slice(&line.to_be_bytes());
                        }
                    }
                }
            }
        }
        out.extend_from_slice(&0u16.to_be_bytes()); // class attributes
        out
    }
}

/// Streaming assembler for one method body.
pub struct Asm<'a> {
    code: Vec<u8>,
    lines: Vec<(u16, u16)>,
    pool: &'a mut PoolBuilder,
}

impl Asm<'_> {
    pub fn offset(&self) -> u16 {
        self.code.len() as u16
    }

    /// Marks the current offset as the start of `line`.
    pub fn line(&mut self, line: u16) {
        self.lines.push((self.offset(), line));
    }

    pub fn op(&mut self, opcode: u8) {
        self.code.push(opcode);
    }

    pub fn op1(&mut self, opcode: u8, operand: u8) {
        self.code.push(opcode);
        self.code.push(operand);
    }

    pub fn iinc(&mut self, local: u8, delta: i8) {
        self.code.push(0x84);
        self.code.push(local);
        self.code.push(delta as u8);
    }

    /// Branch with an absolute target offset.
    pub fn branch(&mut self, opcode: u8, target: u16) {
        let delta = target as i32 - self.offset() as i32;
        self.code.push(opcode);
        self.code.extend_from_slice(&(delta as i16).to_be_bytes());
    }

    pub fn invoke(&mut self, dispatch: Dispatch, owner: &str, name: &str, descriptor: &str) {
        let (opcode, interface) = match dispatch {
            Dispatch::Virtual => (0xb6, false),
            Dispatch::Special => (0xb7, false),
            Dispatch::Static => (0xb8, false),
            Dispatch::Interface => (0xb9, true),
        };
        let idx = self.pool.methodref(owner, name, descriptor, interface);
        self.code.push(opcode);
        self.code.extend_from_slice(&idx.to_be_bytes());
        if interface {
            self.code.extend_from_slice(&[1, 0]);
        }
    }

    /// `new` with a class operand.
    pub fn new_object(&mut self, class: &str) {
        let idx = self.pool.class(class);
        self.code.push(0xbb);
        self.code.extend_from_slice(&idx.to_be_bytes());
    }
}

#[derive(Default)]
struct PoolBuilder {
    bytes: Vec<Vec<u8>>,
    utf8: HashMap<String, u16>,
    classes: HashMap<String, u16>,
    nats: HashMap<(String, String), u16>,
    refs: HashMap<(String, String, String, bool), u16>,
}

impl PoolBuilder {
    fn push(&mut self, entry: Vec<u8>) -> u16 {
        self.bytes.push(entry);
        self.bytes.len() as u16
    }

    fn utf8(&mut self, s: &str) -> u16 {
        if let Some(&i) = self.utf8.get(s) {
            return i;
        }
        let mut e = vec![1u8];
        e.extend_from_slice(&(s.len() as u16).to_be_bytes());
        e.extend_from_slice(s.as_bytes());
        let i = self.push(e);
        self.utf8.insert(s.to_string(), i);
        i
    }

    fn class(&mut self, name: &str) -> u16 {
        if let Some(&i) = self.classes.get(name) {
            return i;
        }
        let name_idx = self.utf8(name);
        let mut e = vec![7u8];
        e.extend_from_slice(&name_idx.to_be_bytes());
        let i = self.push(e);
        self.classes.insert(name.to_string(), i);
        i
    }

    fn name_and_type(&mut self, name: &str, descriptor: &str) -> u16 {
        let key = (name.to_string(), descriptor.to_string());
        if let Some(&i) = self.nats.get(&key) {
            return i;
        }
        let n = self.utf8(name);
        let d = self.utf8(descriptor);
        let mut e = vec![12u8];
        e.extend_from_slice(&n.to_be_bytes());
        e.extend_from_slice(&d.to_be_bytes());
        let i = self.push(e);
        self.nats.insert(key, i);
        i
    }

    fn methodref(&mut self, owner: &str, name: &str, descriptor: &str, interface: bool) -> u16 {
        let key = (owner.to_string(), name.to_string(), descriptor.to_string(), interface);
        if let Some(&i) = self.refs.get(&key) {
            return i;
        }
        let c = self.class(owner);
        let nat = self.name_and_type(name, descriptor);
        let mut e = vec![if interface { 11u8 } else { 10u8 }];
        e.extend_from_slice(&c.to_be_bytes());
        e.extend_from_slice(&nat.to_be_bytes());
        let i = self.push(e);
        self.refs.insert(key, i);
        i
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&((self.bytes.len() + 1) as u16).to_be_bytes());
        for e in &self.bytes {
            out.extend_from_slice(e);
        }
    }
}

/// Parameters for the synthetic project generator.
#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub classes: u32,
    pub methods_per_class: u32,
    /// Filler instructions inside each method's loop body.
    pub filler_per_method: u32,
}

impl SynthSpec {
    /// Rough instruction count of the generated project.
    pub fn approx_instructions(&self) -> u32 {
        self.classes * self.methods_per_class * (self.filler_per_method + 10)
    }
}

/// Generates a layered synthetic project in the text IR.
///
/// `Synth0.main` calls every method of `Synth0`; method `mJ` of `SynthI`
/// calls `mJ` of `SynthI+1`. Each method contains one counted loop so the
/// analyses have real work per method. The call graph is acyclic by
/// construction.
pub fn generate_project_text(spec: SynthSpec) -> String {
    let mut out = String::new();
    for c in 0..spec.classes {
        let _ = writeln!(out, "class Synth{c} extends java/lang/Object {{");
        if c == 0 {
            let _ = writeln!(out, "    method main([Ljava/lang/String;)V static {{");
            let mut off = 0u32;
            for m in 0..spec.methods_per_class {
                let _ = writeln!(out, "        {off}: invokestatic Synth0.m{m}()V @line 1");
                off += 3;
            }
            let _ = writeln!(out, "        {off}: return @line 2");
            let _ = writeln!(out, "    }}");
        }
        for m in 0..spec.methods_per_class {
            let _ = writeln!(out, "    method m{m}()V static {{");
            let line = m + 10;
            // i = 0; while (i < bound) { filler; i++ }
            let _ = writeln!(out, "        0: iconst_0 @line {line}");
            let _ = writeln!(out, "        1: istore_1 @line {line}");
            let head = 2u32;
            let filler_start = head + 4;
            let incr = filler_start + spec.filler_per_method;
            let exit = incr + 6;
            let _ = writeln!(out, "        {head}: iload_1 @line {line}");
            let _ = writeln!(out, "        {}: ifge {exit} @line {line}", head + 1);
            for f in 0..spec.filler_per_method {
                let _ = writeln!(out, "        {}: iload_1 @line {}", filler_start + f, line + 1);
            }
            let _ = writeln!(out, "        {incr}: iinc 1 1 @line {line}");
            let _ = writeln!(out, "        {}: goto {head} @line {line}", incr + 3);
            if c + 1 < spec.classes {
                let _ = writeln!(
                    out,
                    "        {exit}: invokestatic Synth{}.m{m}()V @line {}",
                    c + 1,
                    line + 2
                );
                let _ = writeln!(out, "        {}: return @line {}", exit + 3, line + 3);
            } else {
                let _ = writeln!(out, "        {exit}: return @line {}", line + 3);
            }
            let _ = writeln!(out, "    }}");
        }
        let _ = writeln!(out, "}}");
    }
    out
}

/// Class-file bytes equivalent to the `main_math.jbct` fixture: a `Main`
/// whose `main` builds a `Math`, draws a random int and asks for primality
/// and evenness.
pub fn fig2_main_class_bytes() -> Vec<u8> {
    let mut b = ClassFileBuilder::new("Main", Some("java/lang/Object"));
    b.default_constructor(3);
    b.method_with("main", "([Ljava/lang/String;)V", true, |a| {
        a.line(6);
        a.new_object("java/util/Random"); // 0
        a.op(0x59); // 3: dup
        a.invoke(Dispatch::Special, "java/util/Random", "<init>", "()V"); // 4
        a.op(0x4c); // 7: astore_1
        a.line(7);
        a.new_object("Math"); // 8
        a.op(0x59); // 11: dup
        a.invoke(Dispatch::Special, "Math", "<init>", "()V"); // 12
        a.op(0x4d); // 15: astore_2
        a.line(8);
        a.op(0x2b); // 16: aload_1
        a.invoke(Dispatch::Virtual, "java/util/Random", "nextInt", "()I"); // 17
        a.op(0x3e); // 20: istore_3
        a.line(9);
        a.op(0x2c); // 21: aload_2
        a.op(0x1d); // 22: iload_3
        a.invoke(Dispatch::Virtual, "Math", "isPrime", "(I)Z"); // 23
        a.op1(0x36, 4); // 26: istore 4
        a.line(10);
        a.op(0x2c); // 28: aload_2
        a.op(0x1d); // 29: iload_3
        a.invoke(Dispatch::Virtual, "Math", "isEven", "(I)Z"); // 30
        a.op1(0x36, 5); // 33: istore 5
        a.line(11);
        a.op(0xb1); // 35: return
    });
    b.build()
}

/// Companion to [`fig2_main_class_bytes`]: the `Math` class with `isPrime`
/// (even-test shortcut, then a counted trial-division loop) and `isEven`.
pub fn fig2_math_class_bytes() -> Vec<u8> {
    let mut b = ClassFileBuilder::new("Math", Some("java/lang/Object"));
    b.default_constructor(1);
    b.method_with("isPrime", "(I)Z", false, |a| {
        a.line(4);
        a.op(0x2a); // 0: aload_0
        a.op(0x1b); // 1: iload_1
        a.invoke(Dispatch::Virtual, "Math", "isEven", "(I)Z"); // 2
        a.branch(0x99, 17); // 5: ifeq -> loop init
        a.line(5);
        a.op(0x1b); // 8: iload_1
        a.op(0x05); // 9: iconst_2
        a.branch(0xa0, 15); // 10: if_icmpne -> 15
        a.op(0x04); // 13: iconst_1
        a.op(0xac); // 14: ireturn
        a.op(0x03); // 15: iconst_0
        a.op(0xac); // 16: ireturn
        a.line(7);
        a.op(0x06); // 17: iconst_3
        a.op(0x3d); // 18: istore_2
        a.op(0x1c); // 19: iload_2 (loop head)
        a.op(0x1b); // 20: iload_1
        a.branch(0xa2, 39); // 21: if_icmpge -> return true
        a.line(8);
        a.op(0x1b); // 24: iload_1
        a.op(0x1c); // 25: iload_2
        a.op(0x70); // 26: irem
        a.branch(0x9a, 33); // 27: ifne -> increment
        a.line(9);
        a.op(0x03); // 30: iconst_0
        a.op(0xac); // 31: ireturn
        a.line(7);
        a.iinc(2, 2); // 33
        a.branch(0xa7, 19); // 36: goto head
        a.line(12);
        a.op(0x04); // 39: iconst_1
        a.op(0xac); // 40: ireturn
    });
    b.method_with("isEven", "(I)Z", false, |a| {
        a.line(23);
        a.op(0x1b); // 0: iload_1
        a.op(0x05); // 1: iconst_2
        a.op(0x70); // 2: irem
        a.branch(0x9a, 8); // 3: ifne -> else
        a.line(24);
        a.op(0x04); // 6: iconst_1
        a.op(0xac); // 7: ireturn
        a.line(26);
        a.op(0x03); // 8: iconst_0
        a.op(0xac); // 9: ireturn
    });
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_text_parses_and_scales() {
        let spec = SynthSpec {
            classes: 3,
            methods_per_class: 2,
            filler_per_method: 4,
        };
        let text = generate_project_text(spec);
        let classes = crate::frontend::parse_text_ir(&text).unwrap();
        assert_eq!(classes.len(), 3);
        let total: usize = classes
            .iter()
            .flat_map(|c| &c.methods)
            .map(|m| m.instructions.len())
            .sum();
        assert!(total >= 3 * 2 * 10, "{total}");
    }

    #[test]
    fn fig2_class_bytes_decode() {
        let main = crate::frontend::parse_class_file(&fig2_main_class_bytes()).unwrap();
        assert_eq!(main.name, "Main");
        assert_eq!(main.methods.len(), 2);
        let math = crate::frontend::parse_class_file(&fig2_math_class_bytes()).unwrap();
        assert_eq!(math.methods.len(), 3);
        let is_prime = math.method("isPrime", "(I)Z").unwrap();
        assert_eq!(is_prime.instructions.last().unwrap().offset, 40);
    }
}
