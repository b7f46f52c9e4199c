//! The JVM opcode table: mnemonics, operand shapes and control-flow kinds.
//!
//! All 198 standard opcodes are decodable; `jsr`, `ret`, `jsr_w` and
//! `invokedynamic` are recognized but rejected as unsupported (they do not
//! occur in modern compiler output, and dynamic call sites would need
//! points-to information the model does not carry).

use super::InstrKind;

/// Static operand layout of an opcode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operands {
    None,
    /// One byte (local index, array type, signed byte immediate or narrow
    /// constant-pool index).
    Byte,
    /// Two bytes (wide local index is never this; sipush immediate or
    /// constant-pool index).
    Two,
    /// Signed 16-bit branch offset.
    Branch16,
    /// Signed 32-bit branch offset (`goto_w`).
    Branch32,
    /// `iinc`: local index byte plus signed increment byte.
    Iinc,
    /// Method-ref constant-pool index (`invokevirtual`/`special`/`static`).
    InvokeCp,
    /// `invokeinterface`: cp index, count byte, zero byte.
    InvokeInterfaceCp,
    /// `multianewarray`: cp index plus dimensions byte.
    CpU8,
    /// Padded variable-length `tableswitch`.
    TableSwitch,
    /// Padded variable-length `lookupswitch`.
    LookupSwitch,
    /// `wide` prefix: modified opcode plus widened operands.
    Wide,
}

/// One opcode-table row.
#[derive(Debug, Clone, Copy)]
pub struct OpInfo {
    pub mnemonic: &'static str,
    pub operands: Operands,
    pub kind: InstrKind,
    pub supported: bool,
}

const fn op(mnemonic: &'static str, operands: Operands, kind: InstrKind) -> Option<OpInfo> {
    Some(OpInfo {
        mnemonic,
        operands,
        kind,
        supported: true,
    })
}

const fn unsupported(mnemonic: &'static str, operands: Operands) -> Option<OpInfo> {
    Some(OpInfo {
        mnemonic,
        operands,
        kind: InstrKind::Sequential,
        supported: false,
    })
}

const SEQ: InstrKind = InstrKind::Sequential;
const CBR: InstrKind = InstrKind::CondBranch;

/// Indexed by opcode byte; `None` for bytes outside the standard set.
pub static OPCODES: [Option<OpInfo>; 256] = {
    let mut t: [Option<OpInfo>; 256] = [None; 256];
    t[0x00] = op("nop", Operands::None, SEQ);
    t[0x01] = op("aconst_null", Operands::None, SEQ);
    t[0x02] = op("iconst_m1", Operands::None, SEQ);
    t[0x03] = op("iconst_0", Operands::None, SEQ);
    t[0x04] = op("iconst_1", Operands::None, SEQ);
    t[0x05] = op("iconst_2", Operands::None, SEQ);
    t[0x06] = op("iconst_3", Operands::None, SEQ);
    t[0x07] = op("iconst_4", Operands::None, SEQ);
    t[0x08] = op("iconst_5", Operands::None, SEQ);
    t[0x09] = op("lconst_0", Operands::None, SEQ);
    t[0x0a] = op("lconst_1", Operands::None, SEQ);
    t[0x0b] = op("fconst_0", Operands::None, SEQ);
    t[0x0c] = op("fconst_1", Operands::None, SEQ);
    t[0x0d] = op("fconst_2", Operands::None, SEQ);
    t[0x0e] = op("dconst_0", Operands::None, SEQ);
    t[0x0f] = op("dconst_1", Operands::None, SEQ);
    t[0x10] = op("bipush", Operands::Byte, SEQ);
    t[0x11] = op("sipush", Operands::Two, SEQ);
    t[0x12] = op("ldc", Operands::Byte, SEQ);
    t[0x13] = op("ldc_w", Operands::Two, SEQ);
    t[0x14] = op("ldc2_w", Operands::Two, SEQ);
    t[0x15] = op("iload", Operands::Byte, SEQ);
    t[0x16] = op("lload", Operands::Byte, SEQ);
    t[0x17] = op("fload", Operands::Byte, SEQ);
    t[0x18] = op("dload", Operands::Byte, SEQ);
    t[0x19] = op("aload", Operands::Byte, SEQ);
    t[0x1a] = op("iload_0", Operands::None, SEQ);
    t[0x1b] = op("iload_1", Operands::None, SEQ);
    t[0x1c] = op("iload_2", Operands::None, SEQ);
    t[0x1d] = op("iload_3", Operands::None, SEQ);
    t[0x1e] = op("lload_0", Operands::None, SEQ);
    t[0x1f] = op("lload_1", Operands::None, SEQ);
    t[0x20] = op("lload_2", Operands::None, SEQ);
    t[0x21] = op("lload_3", Operands::None, SEQ);
    t[0x22] = op("fload_0", Operands::None, SEQ);
    t[0x23] = op("fload_1", Operands::None, SEQ);
    t[0x24] = op("fload_2", Operands::None, SEQ);
    t[0x25] = op("fload_3", Operands::None, SEQ);
    t[0x26] = op("dload_0", Operands::None, SEQ);
    t[0x27] = op("dload_1", Operands::None, SEQ);
    t[0x28] = op("dload_2", Operands::None, SEQ);
    t[0x29] = op("dload_3", Operands::None, SEQ);
    t[0x2a] = op("aload_0", Operands::None, SEQ);
    t[0x2b] = op("aload_1", Operands::None, SEQ);
    t[0x2c] = op("aload_2", Operands::None, SEQ);
    t[0x2d] = op("aload_3", Operands::None, SEQ);
    t[0x2e] = op("iaload", Operands::None, SEQ);
    t[0x2f] = op("laload", Operands::None, SEQ);
    t[0x30] = op("faload", Operands::None, SEQ);
    t[0x31] = op("daload", Operands::None, SEQ);
    t[0x32] = op("aaload", Operands::None, SEQ);
    t[0x33] = op("baload", Operands::None, SEQ);
    t[0x34] = op("caload", Operands::None, SEQ);
    t[0x35] = op("saload", Operands::None, SEQ);
    t[0x36] = op("istore", Operands::Byte, SEQ);
    t[0x37] = op("lstore", Operands::Byte, SEQ);
    t[0x38] = op("fstore", Operands::Byte, SEQ);
    t[0x39] = op("dstore", Operands::Byte, SEQ);
    t[0x3a] = op("astore", Operands::Byte, SEQ);
    t[0x3b] = op("istore_0", Operands::None, SEQ);
    t[0x3c] = op("istore_1", Operands::None, SEQ);
    t[0x3d] = op("istore_2", Operands::None, SEQ);
    t[0x3e] = op("istore_3", Operands::None, SEQ);
    t[0x3f] = op("lstore_0", Operands::None, SEQ);
    t[0x40] = op("lstore_1", Operands::None, SEQ);
    t[0x41] = op("lstore_2", Operands::None, SEQ);
    t[0x42] = op("lstore_3", Operands::None, SEQ);
    t[0x43] = op("fstore_0", Operands::None, SEQ);
    t[0x44] = op("fstore_1", Operands::None, SEQ);
    t[0x45] = op("fstore_2", Operands::None, SEQ);
    t[0x46] = op("fstore_3", Operands::None, SEQ);
    t[0x47] = op("dstore_0", Operands::None, SEQ);
    t[0x48] = op("dstore_1", Operands::None, SEQ);
    t[0x49] = op("dstore_2", Operands::None, SEQ);
    t[0x4a] = op("dstore_3", Operands::None, SEQ);
    t[0x4b] = op("astore_0", Operands::None, SEQ);
    t[0x4c] = op("astore_1", Operands::None, SEQ);
    t[0x4d] = op("astore_2", Operands::None, SEQ);
    t[0x4e] = op("astore_3", Operands::None, SEQ);
    t[0x4f] = op("iastore", Operands::None, SEQ);
    t[0x50] = op("lastore", Operands::None, SEQ);
    t[0x51] = op("fastore", Operands::None, SEQ);
    t[0x52] = op("dastore", Operands::None, SEQ);
    t[0x53] = op("aastore", Operands::None, SEQ);
    t[0x54] = op("bastore", Operands::None, SEQ);
    t[0x55] = op("castore", Operands::None, SEQ);
    t[0x56] = op("sastore", Operands::None, SEQ);
    t[0x57] = op("pop", Operands::None, SEQ);
    t[0x58] = op("pop2", Operands::None, SEQ);
    t[0x59] = op("dup", Operands::None, SEQ);
    t[0x5a] = op("dup_x1", Operands::None, SEQ);
    t[0x5b] = op("dup_x2", Operands::None, SEQ);
    t[0x5c] = op("dup2", Operands::None, SEQ);
    t[0x5d] = op("dup2_x1", Operands::None, SEQ);
    t[0x5e] = op("dup2_x2", Operands::None, SEQ);
    t[0x5f] = op("swap", Operands::None, SEQ);
    t[0x60] = op("iadd", Operands::None, SEQ);
    t[0x61] = op("ladd", Operands::None, SEQ);
    t[0x62] = op("fadd", Operands::None, SEQ);
    t[0x63] = op("dadd", Operands::None, SEQ);
    t[0x64] = op("isub", Operands::None, SEQ);
    t[0x65] = op("lsub", Operands::None, SEQ);
    t[0x66] = op("fsub", Operands::None, SEQ);
    t[0x67] = op("dsub", Operands::None, SEQ);
    t[0x68] = op("imul", Operands::None, SEQ);
    t[0x69] = op("lmul", Operands::None, SEQ);
    t[0x6a] = op("fmul", Operands::None, SEQ);
    t[0x6b] = op("dmul", Operands::None, SEQ);
    t[0x6c] = op("idiv", Operands::None, SEQ);
    t[0x6d] = op("ldiv", Operands::None, SEQ);
    t[0x6e] = op("fdiv", Operands::None, SEQ);
    t[0x6f] = op("ddiv", Operands::None, SEQ);
    t[0x70] = op("irem", Operands::None, SEQ);
    t[0x71] = op("lrem", Operands::None, SEQ);
    t[0x72] = op("frem", Operands::None, SEQ);
    t[0x73] = op("drem", Operands::None, SEQ);
    t[0x74] = op("ineg", Operands::None, SEQ);
    t[0x75] = op("lneg", Operands::None, SEQ);
    t[0x76] = op("fneg", Operands::None, SEQ);
    t[0x77] = op("dneg", Operands::None, SEQ);
    t[0x78] = op("ishl", Operands::None, SEQ);
    t[0x79] = op("lshl", Operands::None, SEQ);
    t[0x7a] = op("ishr", Operands::None, SEQ);
    t[0x7b] = op("lshr", Operands::None, SEQ);
    t[0x7c] = op("iushr", Operands::None, SEQ);
    t[0x7d] = op("lushr", Operands::None, SEQ);
    t[0x7e] = op("iand", Operands::None, SEQ);
    t[0x7f] = op("land", Operands::None, SEQ);
    t[0x80] = op("ior", Operands::None, SEQ);
    t[0x81] = op("lor", Operands::None, SEQ);
    t[0x82] = op("ixor", Operands::None, SEQ);
    t[0x83] = op("lxor", Operands::None, SEQ);
    t[0x84] = op("iinc", Operands::Iinc, SEQ);
    t[0x85] = op("i2l", Operands::None, SEQ);
    t[0x86] = op("i2f", Operands::None, SEQ);
    t[0x87] = op("i2d", Operands::None, SEQ);
    t[0x88] = op("l2i", Operands::None, SEQ);
    t[0x89] = op("l2f", Operands::None, SEQ);
    t[0x8a] = op("l2d", Operands::None, SEQ);
    t[0x8b] = op("f2i", Operands::None, SEQ);
    t[0x8c] = op("f2l", Operands::None, SEQ);
    t[0x8d] = op("f2d", Operands::None, SEQ);
    t[0x8e] = op("d2i", Operands::None, SEQ);
    t[0x8f] = op("d2l", Operands::None, SEQ);
    t[0x90] = op("d2f", Operands::None, SEQ);
    t[0x91] = op("i2b", Operands::None, SEQ);
    t[0x92] = op("i2c", Operands::None, SEQ);
    t[0x93] = op("i2s", Operands::None, SEQ);
    t[0x94] = op("lcmp", Operands::None, SEQ);
    t[0x95] = op("fcmpl", Operands::None, SEQ);
    t[0x96] = op("fcmpg", Operands::None, SEQ);
    t[0x97] = op("dcmpl", Operands::None, SEQ);
    t[0x98] = op("dcmpg", Operands::None, SEQ);
    t[0x99] = op("ifeq", Operands::Branch16, CBR);
    t[0x9a] = op("ifne", Operands::Branch16, CBR);
    t[0x9b] = op("iflt", Operands::Branch16, CBR);
    t[0x9c] = op("ifge", Operands::Branch16, CBR);
    t[0x9d] = op("ifgt", Operands::Branch16, CBR);
    t[0x9e] = op("ifle", Operands::Branch16, CBR);
    t[0x9f] = op("if_icmpeq", Operands::Branch16, CBR);
    t[0xa0] = op("if_icmpne", Operands::Branch16, CBR);
    t[0xa1] = op("if_icmplt", Operands::Branch16, CBR);
    t[0xa2] = op("if_icmpge", Operands::Branch16, CBR);
    t[0xa3] = op("if_icmpgt", Operands::Branch16, CBR);
    t[0xa4] = op("if_icmple", Operands::Branch16, CBR);
    t[0xa5] = op("if_acmpeq", Operands::Branch16, CBR);
    t[0xa6] = op("if_acmpne", Operands::Branch16, CBR);
    t[0xa7] = op("goto", Operands::Branch16, InstrKind::Goto);
    t[0xa8] = unsupported("jsr", Operands::Branch16);
    t[0xa9] = unsupported("ret", Operands::Byte);
    t[0xaa] = op("tableswitch", Operands::TableSwitch, InstrKind::Switch);
    t[0xab] = op("lookupswitch", Operands::LookupSwitch, InstrKind::Switch);
    t[0xac] = op("ireturn", Operands::None, InstrKind::Return);
    t[0xad] = op("lreturn", Operands::None, InstrKind::Return);
    t[0xae] = op("freturn", Operands::None, InstrKind::Return);
    t[0xaf] = op("dreturn", Operands::None, InstrKind::Return);
    t[0xb0] = op("areturn", Operands::None, InstrKind::Return);
    t[0xb1] = op("return", Operands::None, InstrKind::Return);
    t[0xb2] = op("getstatic", Operands::Two, SEQ);
    t[0xb3] = op("putstatic", Operands::Two, SEQ);
    t[0xb4] = op("getfield", Operands::Two, SEQ);
    t[0xb5] = op("putfield", Operands::Two, SEQ);
    t[0xb6] = op("invokevirtual", Operands::InvokeCp, InstrKind::Invoke);
    t[0xb7] = op("invokespecial", Operands::InvokeCp, InstrKind::Invoke);
    t[0xb8] = op("invokestatic", Operands::InvokeCp, InstrKind::Invoke);
    t[0xb9] = op("invokeinterface", Operands::InvokeInterfaceCp, InstrKind::Invoke);
    t[0xba] = unsupported("invokedynamic", Operands::InvokeInterfaceCp);
    t[0xbb] = op("new", Operands::Two, SEQ);
    t[0xbc] = op("newarray", Operands::Byte, SEQ);
    t[0xbd] = op("anewarray", Operands::Two, SEQ);
    t[0xbe] = op("arraylength", Operands::None, SEQ);
    t[0xbf] = op("athrow", Operands::None, InstrKind::Throw);
    t[0xc0] = op("checkcast", Operands::Two, SEQ);
    t[0xc1] = op("instanceof", Operands::Two, SEQ);
    t[0xc2] = op("monitorenter", Operands::None, SEQ);
    t[0xc3] = op("monitorexit", Operands::None, SEQ);
    t[0xc4] = op("wide", Operands::Wide, SEQ);
    t[0xc5] = op("multianewarray", Operands::CpU8, SEQ);
    t[0xc6] = op("ifnull", Operands::Branch16, CBR);
    t[0xc7] = op("ifnonnull", Operands::Branch16, CBR);
    t[0xc8] = op("goto_w", Operands::Branch32, InstrKind::Goto);
    t[0xc9] = unsupported("jsr_w", Operands::Branch32);
    t
};

/// Looks up an opcode row by mnemonic. Linear scan; used by the text-IR
/// parser, which is not on a hot path.
pub fn by_mnemonic(mnemonic: &str) -> Option<&'static OpInfo> {
    OPCODES
        .iter()
        .flatten()
        .find(|info| info.mnemonic == mnemonic)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_198_supported_and_4_rejected_opcodes() {
        let supported = OPCODES.iter().flatten().filter(|o| o.supported).count();
        let rejected = OPCODES.iter().flatten().filter(|o| !o.supported).count();
        assert_eq!(supported, 198);
        assert_eq!(rejected, 4);
        for name in ["jsr", "ret", "jsr_w", "invokedynamic"] {
            assert!(!by_mnemonic(name).unwrap().supported, "{name}");
        }
    }

    #[test]
    fn kinds_match_the_control_flow_contract() {
        assert_eq!(by_mnemonic("goto").unwrap().kind, InstrKind::Goto);
        assert_eq!(by_mnemonic("ifnull").unwrap().kind, InstrKind::CondBranch);
        assert_eq!(by_mnemonic("athrow").unwrap().kind, InstrKind::Throw);
        assert_eq!(by_mnemonic("areturn").unwrap().kind, InstrKind::Return);
        assert_eq!(by_mnemonic("lookupswitch").unwrap().kind, InstrKind::Switch);
        assert_eq!(by_mnemonic("invokeinterface").unwrap().kind, InstrKind::Invoke);
        assert_eq!(by_mnemonic("iadd").unwrap().kind, InstrKind::Sequential);
    }
}
