use std::collections::HashSet;

use serde::Serialize;

use super::QStateError;

/// Total qubit budget across all registers, including the setting register.
pub const MAX_TOTAL_WIDTH: u32 = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Register {
    pub name: String,
    pub width: u32,
}

impl Register {
    pub fn new(name: impl Into<String>, width: u32) -> Self {
        Self {
            name: name.into(),
            width,
        }
    }
}

/// Ordered quantum registers plus an optional setting register.
///
/// Basis indices are register-major: the first register holds the most
/// significant bits and each register is big-endian. The setting register is
/// never part of a branch's amplitude vector; it labels the branch instead.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegisterLayout {
    registers: Vec<Register>,
    setting: Option<Register>,
}

impl RegisterLayout {
    pub fn new(registers: Vec<Register>, setting: Option<Register>) -> Result<Self, QStateError> {
        let mut names = HashSet::new();
        let mut total = 0u32;
        for reg in registers.iter().chain(setting.iter()) {
            if reg.width == 0 {
                return Err(QStateError::InvalidLayout(format!(
                    "register {} has zero width",
                    reg.name
                )));
            }
            if !names.insert(reg.name.as_str()) {
                return Err(QStateError::InvalidLayout(format!(
                    "duplicate register name {}",
                    reg.name
                )));
            }
            total = total.saturating_add(reg.width);
        }
        if registers.is_empty() {
            return Err(QStateError::InvalidLayout(
                "at least one quantum register is required".into(),
            ));
        }
        if total > MAX_TOTAL_WIDTH {
            return Err(QStateError::InvalidLayout(format!(
                "total width {total} exceeds {MAX_TOTAL_WIDTH} qubits"
            )));
        }
        Ok(Self { registers, setting })
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn setting_register(&self) -> Option<&Register> {
        self.setting.as_ref()
    }

    pub fn is_setting_register(&self, name: &str) -> bool {
        self.setting.as_ref().is_some_and(|r| r.name == name)
    }

    /// Width of the amplitude vector's index, in bits.
    pub fn state_width(&self) -> u32 {
        self.registers.iter().map(|r| r.width).sum()
    }

    pub fn dimension(&self) -> usize {
        1usize << self.state_width()
    }

    /// Bit shift and width of a quantum register within the basis index.
    pub fn slot(&self, name: &str) -> Result<RegisterSlot, QStateError> {
        let mut shift = self.state_width();
        for reg in &self.registers {
            shift -= reg.width;
            if reg.name == name {
                return Ok(RegisterSlot {
                    shift,
                    width: reg.width,
                });
            }
        }
        Err(QStateError::UnknownRegister(name.to_string()))
    }

    /// Human-readable basis label, registers separated by `|`.
    pub fn label(&self, index: usize) -> String {
        let mut shift = self.state_width();
        let mut parts = Vec::with_capacity(self.registers.len());
        for reg in &self.registers {
            shift -= reg.width;
            let value = (index >> shift) & ((1usize << reg.width) - 1);
            parts.push(format!("{value:0w$b}", w = reg.width as usize));
        }
        parts.join("|")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegisterSlot {
    pub shift: u32,
    pub width: u32,
}

impl RegisterSlot {
    pub fn mask(&self) -> usize {
        ((1usize << self.width) - 1) << self.shift
    }

    pub fn extract(&self, index: usize) -> usize {
        (index >> self.shift) & ((1usize << self.width) - 1)
    }

    pub fn replace(&self, index: usize, value: usize) -> usize {
        (index & !self.mask()) | (value << self.shift)
    }

    pub fn dimension(&self) -> usize {
        1usize << self.width
    }
}
