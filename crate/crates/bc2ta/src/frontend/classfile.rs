//! Decoder for compiled `.class` files.
//!
//! Parses the constant pool, method bodies and `LineNumberTable`
//! attributes; everything else (stack maps, annotations, generics
//! metadata) is skipped. Exception-handler tables are parsed and
//! discarded: handler control flow is not modeled.

use super::opcodes::{Operands, OPCODES};
use super::{Dispatch, FrontendError, InstrKind, InvokeRef, RawClass, RawInstruction, RawMethod};
use std::collections::BTreeMap;

/// Highest supported class-file major version (Java 17).
pub const MAX_MAJOR_VERSION: u16 = 61;

const ACC_INTERFACE: u16 = 0x0200;
const ACC_STATIC: u16 = 0x0008;
const ACC_NATIVE: u16 = 0x0100;
const ACC_ABSTRACT: u16 = 0x0400;

/// Parses one compiled class.
pub fn parse_class_file(data: &[u8]) -> Result<RawClass, FrontendError> {
    let mut r = Reader { data, pos: 0 };
    if r.u32()? != 0xCAFE_BABE {
        return Err(FrontendError::MalformedClassFile("bad magic".into()));
    }
    let _minor = r.u16()?;
    let major = r.u16()?;
    if major > MAX_MAJOR_VERSION || major < 45 {
        return Err(FrontendError::UnsupportedVersion {
            major,
            ceiling: MAX_MAJOR_VERSION,
        });
    }

    let pool = ConstantPool::parse(&mut r)?;

    let access = r.u16()?;
    let this_class = r.u16()?;
    let super_class = r.u16()?;
    let name = pool.class_name(this_class)?;
    let super_name = if super_class == 0 {
        None
    } else {
        Some(pool.class_name(super_class)?)
    };

    let iface_count = r.u16()?;
    let mut interfaces = Vec::with_capacity(iface_count as usize);
    for _ in 0..iface_count {
        let idx = r.u16()?;
        interfaces.push(pool.class_name(idx)?);
    }

    // Fields: names and attributes are irrelevant to control flow.
    let field_count = r.u16()?;
    for _ in 0..field_count {
        r.skip(6)?;
        skip_attributes(&mut r)?;
    }

    let method_count = r.u16()?;
    let mut methods = Vec::with_capacity(method_count as usize);
    for _ in 0..method_count {
        let macc = r.u16()?;
        let mname = pool.utf8(r.u16()?)?;
        let mdesc = pool.utf8(r.u16()?)?;
        if !super::valid_method_descriptor(&mdesc) {
            return Err(FrontendError::MalformedClassFile(format!(
                "invalid method descriptor {mdesc} on {mname}"
            )));
        }
        let mut instructions = Vec::new();
        let mut line_table = BTreeMap::new();
        let attr_count = r.u16()?;
        for _ in 0..attr_count {
            let aname = pool.utf8(r.u16()?)?;
            let alen = r.u32()? as usize;
            if aname == "Code" {
                let code_end = r.pos + alen;
                parse_code(&mut r, &pool, &mut instructions, &mut line_table)?;
                if r.pos > code_end {
                    return Err(FrontendError::MalformedClassFile(
                        "Code attribute overruns its length".into(),
                    ));
                }
                r.pos = code_end;
            } else {
                r.skip(alen)?;
            }
        }
        assign_lines(&mut instructions, &line_table);
        let method = RawMethod {
            name: mname,
            descriptor: mdesc,
            is_static: macc & ACC_STATIC != 0,
            is_abstract: macc & (ACC_ABSTRACT | ACC_NATIVE) != 0,
            instructions,
            line_table,
        };
        method.validate()?;
        if method.is_abstract && !method.instructions.is_empty() {
            return Err(FrontendError::MalformedClassFile(format!(
                "abstract method {} has code",
                method.name
            )));
        }
        for earlier in &methods {
            let e: &RawMethod = earlier;
            if e.name == method.name && e.descriptor == method.descriptor {
                return Err(FrontendError::MalformedClassFile(format!(
                    "duplicate method {}{}",
                    method.name, method.descriptor
                )));
            }
        }
        methods.push(method);
    }

    Ok(RawClass {
        name,
        super_name,
        interfaces,
        methods,
        is_interface: access & ACC_INTERFACE != 0,
    })
}

fn parse_code(
    r: &mut Reader,
    pool: &ConstantPool,
    instructions: &mut Vec<RawInstruction>,
    line_table: &mut BTreeMap<u32, u32>,
) -> Result<(), FrontendError> {
    r.skip(4)?; // max_stack, max_locals
    let code_len = r.u32()? as usize;
    let code_start = r.pos;
    let code_end = code_start + code_len;
    if code_end > r.data.len() {
        return Err(FrontendError::MalformedClassFile("truncated code array".into()));
    }

    while r.pos < code_end {
        let offset = (r.pos - code_start) as u32;
        let opcode = r.u8()?;
        let info = OPCODES[opcode as usize].ok_or_else(|| {
            FrontendError::MalformedClassFile(format!("unknown opcode 0x{opcode:02x} at {offset}"))
        })?;
        if !info.supported {
            return Err(FrontendError::UnsupportedOpcode {
                opcode,
                mnemonic: info.mnemonic,
                offset,
            });
        }
        let mut mnemonic = info.mnemonic.to_string();
        let mut branch_targets = Vec::new();
        let mut invoke_ref = None;
        match info.operands {
            Operands::None => {}
            Operands::Byte | Operands::Iinc => {
                r.skip(if info.operands == Operands::Iinc { 2 } else { 1 })?;
            }
            Operands::Two | Operands::CpU8 => {
                r.skip(if info.operands == Operands::CpU8 { 3 } else { 2 })?;
            }
            Operands::Branch16 => {
                let delta = r.i16()? as i64;
                branch_targets.push(rel_target(offset, delta)?);
            }
            Operands::Branch32 => {
                let delta = r.i32()? as i64;
                branch_targets.push(rel_target(offset, delta)?);
            }
            Operands::InvokeCp => {
                let idx = r.u16()?;
                invoke_ref = Some(pool.invoke_ref(idx, dispatch_of(opcode))?);
            }
            Operands::InvokeInterfaceCp => {
                let idx = r.u16()?;
                r.skip(2)?; // count, zero
                invoke_ref = Some(pool.invoke_ref(idx, Dispatch::Interface)?);
            }
            Operands::TableSwitch => {
                r.align4(code_start)?;
                let default = r.i32()? as i64;
                let low = r.i32()?;
                let high = r.i32()?;
                if high < low {
                    return Err(FrontendError::MalformedClassFile(format!(
                        "tableswitch high < low at {offset}"
                    )));
                }
                branch_targets.push(rel_target(offset, default)?);
                for _ in low..=high {
                    let delta = r.i32()? as i64;
                    branch_targets.push(rel_target(offset, delta)?);
                }
            }
            Operands::LookupSwitch => {
                r.align4(code_start)?;
                let default = r.i32()? as i64;
                let npairs = r.i32()?;
                if npairs < 0 {
                    return Err(FrontendError::MalformedClassFile(format!(
                        "negative lookupswitch pair count at {offset}"
                    )));
                }
                branch_targets.push(rel_target(offset, default)?);
                for _ in 0..npairs {
                    let _match = r.i32()?;
                    let delta = r.i32()? as i64;
                    branch_targets.push(rel_target(offset, delta)?);
                }
            }
            Operands::Wide => {
                let modified = r.u8()?;
                let winfo = OPCODES[modified as usize].ok_or_else(|| {
                    FrontendError::MalformedClassFile(format!(
                        "unknown wide opcode 0x{modified:02x} at {offset}"
                    ))
                })?;
                if !winfo.supported {
                    return Err(FrontendError::UnsupportedOpcode {
                        opcode: modified,
                        mnemonic: winfo.mnemonic,
                        offset,
                    });
                }
                match modified {
                    0x84 => r.skip(4)?,                   // wide iinc
                    0x15..=0x19 | 0x36..=0x3a => r.skip(2)?, // wide load/store
                    _ => {
                        return Err(FrontendError::MalformedClassFile(format!(
                            "opcode {} cannot be widened at {offset}",
                            winfo.mnemonic
                        )))
                    }
                }
                mnemonic = winfo.mnemonic.to_string();
            }
        }
        instructions.push(RawInstruction {
            offset,
            mnemonic,
            kind: info.kind,
            branch_targets,
            invoke_ref,
            line: 0,
        });
    }

    let handler_count = r.u16()?;
    r.skip(handler_count as usize * 8)?; // handlers parsed, not modeled

    let attr_count = r.u16()?;
    for _ in 0..attr_count {
        let aname_idx = r.u16()?;
        let alen = r.u32()? as usize;
        let aname = pool.utf8(aname_idx)?;
        if aname == "LineNumberTable" {
            let entries = r.u16()?;
            for _ in 0..entries {
                let start_pc = r.u16()? as u32;
                let line = r.u16()? as u32;
                line_table.entry(start_pc).or_insert(line);
            }
        } else {
            r.skip(alen)?;
        }
    }
    Ok(())
}

fn rel_target(offset: u32, delta: i64) -> Result<u32, FrontendError> {
    let t = offset as i64 + delta;
    u32::try_from(t).map_err(|_| {
        FrontendError::MalformedClassFile(format!("branch at {offset} targets negative offset"))
    })
}

fn dispatch_of(opcode: u8) -> Dispatch {
    match opcode {
        0xb6 => Dispatch::Virtual,
        0xb7 => Dispatch::Special,
        0xb8 => Dispatch::Static,
        _ => Dispatch::Interface,
    }
}

/// Assigns each instruction the line of the latest table entry at or
/// before its offset.
fn assign_lines(instructions: &mut [RawInstruction], line_table: &BTreeMap<u32, u32>) {
    for ins in instructions {
        ins.line = line_table
            .range(..=ins.offset)
            .next_back()
            .map(|(_, &line)| line)
            .unwrap_or(0);
    }
}

fn skip_attributes(r: &mut Reader) -> Result<(), FrontendError> {
    let count = r.u16()?;
    for _ in 0..count {
        r.skip(2)?;
        let len = r.u32()? as usize;
        r.skip(len)?;
    }
    Ok(())
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn u8(&mut self) -> Result<u8, FrontendError> {
        let b = *self
            .data
            .get(self.pos)
            .ok_or_else(|| FrontendError::MalformedClassFile("unexpected end of file".into()))?;
        self.pos += 1;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16, FrontendError> {
        Ok(u16::from(self.u8()?) << 8 | u16::from(self.u8()?))
    }

    fn u32(&mut self) -> Result<u32, FrontendError> {
        Ok(u32::from(self.u16()?) << 16 | u32::from(self.u16()?))
    }

    fn i16(&mut self) -> Result<i16, FrontendError> {
        Ok(self.u16()? as i16)
    }

    fn i32(&mut self) -> Result<i32, FrontendError> {
        Ok(self.u32()? as i32)
    }

    fn skip(&mut self, n: usize) -> Result<(), FrontendError> {
        if self.pos + n > self.data.len() {
            return Err(FrontendError::MalformedClassFile("unexpected end of file".into()));
        }
        self.pos += n;
        Ok(())
    }

    /// Skips switch padding to the next 4-byte boundary relative to the
    /// start of the code array.
    fn align4(&mut self, code_start: usize) -> Result<(), FrontendError> {
        let rel = self.pos - code_start;
        let pad = (4 - rel % 4) % 4;
        self.skip(pad)
    }
}

enum CpEntry {
    Utf8(String),
    Class(u16),
    Ref { class: u16, name_and_type: u16 },
    NameAndType { name: u16, descriptor: u16 },
    Other,
}

struct ConstantPool {
    entries: Vec<Option<CpEntry>>,
}

impl ConstantPool {
    fn parse(r: &mut Reader) -> Result<ConstantPool, FrontendError> {
        let count = r.u16()? as usize;
        if count == 0 {
            return Err(FrontendError::MalformedClassFile("empty constant pool".into()));
        }
        let mut entries: Vec<Option<CpEntry>> = Vec::with_capacity(count);
        entries.push(None); // index 0 is unused
        let mut i = 1;
        while i < count {
            let tag = r.u8()?;
            let (entry, double_wide) = match tag {
                1 => {
                    let len = r.u16()? as usize;
                    if r.pos + len > r.data.len() {
                        return Err(FrontendError::MalformedClassFile("truncated utf8".into()));
                    }
                    let bytes = &r.data[r.pos..r.pos + len];
                    r.pos += len;
                    // Modified UTF-8 differs from UTF-8 only for NUL and
                    // supplementary characters, which never occur in the
                    // names this decoder cares about.
                    let s = String::from_utf8_lossy(bytes).into_owned();
                    (CpEntry::Utf8(s), false)
                }
                3 | 4 => {
                    r.skip(4)?;
                    (CpEntry::Other, false)
                }
                5 | 6 => {
                    r.skip(8)?;
                    (CpEntry::Other, true)
                }
                7 => (CpEntry::Class(r.u16()?), false),
                8 | 16 | 19 | 20 => {
                    r.skip(2)?;
                    (CpEntry::Other, false)
                }
                9 | 10 | 11 => {
                    let class = r.u16()?;
                    let name_and_type = r.u16()?;
                    (CpEntry::Ref { class, name_and_type }, false)
                }
                12 => {
                    let name = r.u16()?;
                    let descriptor = r.u16()?;
                    (CpEntry::NameAndType { name, descriptor }, false)
                }
                15 => {
                    r.skip(3)?;
                    (CpEntry::Other, false)
                }
                17 | 18 => {
                    r.skip(4)?;
                    (CpEntry::Other, false)
                }
                _ => {
                    return Err(FrontendError::MalformedClassFile(format!(
                        "unknown constant pool tag {tag}"
                    )))
                }
            };
            entries.push(Some(entry));
            if double_wide {
                entries.push(None);
                i += 1;
            }
            i += 1;
        }
        Ok(ConstantPool { entries })
    }

    fn get(&self, index: u16) -> Result<&CpEntry, FrontendError> {
        self.entries
            .get(index as usize)
            .and_then(|e| e.as_ref())
            .ok_or_else(|| {
                FrontendError::MalformedClassFile(format!("invalid constant pool index {index}"))
            })
    }

    fn utf8(&self, index: u16) -> Result<String, FrontendError> {
        match self.get(index)? {
            CpEntry::Utf8(s) => Ok(s.clone()),
            _ => Err(FrontendError::MalformedClassFile(format!(
                "constant pool index {index} is not utf8"
            ))),
        }
    }

    fn class_name(&self, index: u16) -> Result<String, FrontendError> {
        match self.get(index)? {
            CpEntry::Class(name_idx) => self.utf8(*name_idx),
            _ => Err(FrontendError::MalformedClassFile(format!(
                "constant pool index {index} is not a class"
            ))),
        }
    }

    fn invoke_ref(&self, index: u16, dispatch: Dispatch) -> Result<InvokeRef, FrontendError> {
        match self.get(index)? {
            CpEntry::Ref { class, name_and_type } => {
                let owner = self.class_name(*class)?;
                match self.get(*name_and_type)? {
                    CpEntry::NameAndType { name, descriptor } => Ok(InvokeRef {
                        owner,
                        name: self.utf8(*name)?,
                        descriptor: self.utf8(*descriptor)?,
                        dispatch,
                    }),
                    _ => Err(FrontendError::MalformedClassFile(
                        "method ref without name-and-type".into(),
                    )),
                }
            }
            _ => Err(FrontendError::MalformedClassFile(format!(
                "constant pool index {index} is not a method ref"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::ClassFileBuilder;

    #[test]
    fn rejects_bad_magic() {
        let err = parse_class_file(&[0, 0, 0, 0, 0, 0, 0, 52]).unwrap_err();
        assert!(matches!(err, FrontendError::MalformedClassFile(_)));
    }

    #[test]
    fn rejects_newer_versions() {
        let mut b = ClassFileBuilder::new("X", Some("java/lang/Object"));
        let mut bytes = b.build();
        bytes[6] = 0;
        bytes[7] = 62;
        assert!(matches!(
            parse_class_file(&bytes),
            Err(FrontendError::UnsupportedVersion { major: 62, .. })
        ));
    }

    #[test]
    fn decodes_minimal_class_with_default_constructor() {
        let mut b = ClassFileBuilder::new("Empty", Some("java/lang/Object"));
        b.default_constructor(3);
        let raw = parse_class_file(&b.build()).unwrap();
        assert_eq!(raw.name, "Empty");
        assert_eq!(raw.methods.len(), 1);
        let init = &raw.methods[0];
        assert_eq!(init.name, "<init>");
        let mnems: Vec<_> = init.instructions.iter().map(|i| i.mnemonic.as_str()).collect();
        assert_eq!(mnems, ["aload_0", "invokespecial", "return"]);
        assert_eq!(init.instructions[1].invoke_ref.as_ref().unwrap().owner, "java/lang/Object");
    }

    #[test]
    fn rejects_jsr() {
        let mut b = ClassFileBuilder::new("J", Some("java/lang/Object"));
        // jsr +3; return
        b.raw_method("m", "()V", true, &[(0xa8, vec![0, 3]), (0xb1, vec![])], &[]);
        assert!(matches!(
            parse_class_file(&b.build()),
            Err(FrontendError::UnsupportedOpcode { mnemonic: "jsr", .. })
        ));
    }

    #[test]
    fn decodes_every_supported_opcode_with_the_right_kind() {
        use crate::frontend::opcodes::{Operands, OPCODES};
        for (byte, info) in OPCODES.iter().enumerate() {
            let Some(info) = info else { continue };
            if !info.supported || info.operands == Operands::Wide {
                continue;
            }
            let operand: Vec<u8> = match info.operands {
                Operands::None => vec![],
                Operands::Byte => vec![1],
                Operands::Iinc => vec![1, 1],
                Operands::Two | Operands::CpU8 | Operands::InvokeCp | Operands::InvokeInterfaceCp => {
                    // Constant-pool operands point at the builder's
                    // synthetic method ref; the others just need bytes.
                    vec![0; 0]
                }
                Operands::Branch16 => vec![0, 0],
                Operands::Branch32 => vec![0, 0, 0, 0],
                Operands::TableSwitch | Operands::LookupSwitch => vec![],
            };
            let mut b = ClassFileBuilder::new("Zoo", Some("java/lang/Object"));
            match info.operands {
                Operands::InvokeCp | Operands::InvokeInterfaceCp => {
                    b.one_opcode_invoke_method(byte as u8);
                }
                Operands::Two => b.one_opcode_cp16_method(byte as u8),
                Operands::CpU8 => b.one_opcode_cp16u8_method(byte as u8),
                Operands::TableSwitch => b.tableswitch_method(),
                Operands::LookupSwitch => b.lookupswitch_method(),
                _ => b.raw_method("m", "()V", true, &[(byte as u8, operand)], &[]),
            }
            let raw = parse_class_file(&b.build())
                .unwrap_or_else(|e| panic!("opcode 0x{byte:02x} {}: {e}", info.mnemonic));
            let ins = &raw.methods[0].instructions[0];
            assert_eq!(ins.kind, info.kind, "kind of {}", info.mnemonic);
            assert_eq!(ins.mnemonic, info.mnemonic);
        }
        // The wide prefix decodes as its modified opcode.
        let mut b = ClassFileBuilder::new("W", Some("java/lang/Object"));
        b.raw_method("m", "()V", true, &[(0xc4, vec![0x15, 0x01, 0x00]), (0xb1, vec![])], &[]);
        let raw = parse_class_file(&b.build()).unwrap();
        assert_eq!(raw.methods[0].instructions[0].mnemonic, "iload");
        assert_eq!(raw.methods[0].instructions[1].offset, 4);
    }

    #[test]
    fn line_numbers_follow_the_latest_table_entry() {
        let mut b = ClassFileBuilder::new("L", Some("java/lang/Object"));
        b.raw_method(
            "m",
            "()V",
            true,
            &[(0x03, vec![]), (0x57, vec![]), (0xb1, vec![])],
            &[(0, 10), (2, 12)],
        );
        let raw = parse_class_file(&b.build()).unwrap();
        let lines: Vec<u32> = raw.methods[0].instructions.iter().map(|i| i.line).collect();
        assert_eq!(lines, [10, 10, 12]);
    }
}
