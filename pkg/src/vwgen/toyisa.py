"""A tiny straight-line register machine for checking rewrite equivalence.

Deliberately quirky on purpose: registers and memory cells hold 64-bit
values, yet push/pop move the stack pointer by 4, mirroring the literal
`add esp, 4` idiom the rewrite rules produce.  Memory is a sparse map whose
unwritten cells read as zero.  There are no flags and no control flow, so
execution is total and equivalence over probe states is decidable.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

MASK = (1 << 64) - 1
REGISTERS = ("eax", "ebx", "ecx", "edx", "esp")
STACK_WINDOW = (0x1000, 0x10000)
STACK_STRIDE = 4

# Operand count per opcode; dst/src legality is checked in Instruction.
OPCODES = {
    "mov": 2, "push": 1, "pop": 1, "add": 2, "sub": 2,
    "inc": 1, "dec": 1, "xor": 2, "and": 2, "or": 2, "not": 1,
}

DEMO_CONSTANTS = {"key": 42}


class ToyIsaError(Exception):
    pass


class BadInstructionError(ToyIsaError):
    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line


class StackBoundsError(ToyIsaError):
    pass


class OutOfFuelError(ToyIsaError):
    pass


@dataclass(frozen=True)
class Reg:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Imm:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class MemAt:
    """Memory operand: either register-indirect or an absolute address."""

    base: str | None = None
    address: int | None = None

    def __post_init__(self) -> None:
        if (self.base is None) == (self.address is None):
            raise BadInstructionError("memory operand needs a register or an address")
        if self.base is not None and self.base not in REGISTERS:
            raise BadInstructionError(f"unknown base register {self.base!r}")

    def __str__(self) -> str:
        inner = self.base if self.base is not None else f"0x{self.address:x}"
        return f"[ {inner} ]"


Operand = Reg | Imm | MemAt


@dataclass(frozen=True)
class Instruction:
    opcode: str
    operands: tuple[Operand, ...]

    def __post_init__(self) -> None:
        arity = OPCODES.get(self.opcode)
        if arity is None:
            raise BadInstructionError(f"unknown opcode {self.opcode!r}")
        if len(self.operands) != arity:
            raise BadInstructionError(
                f"{self.opcode} takes {arity} operand(s), got {len(self.operands)}")
        if self.opcode != "push" and isinstance(self.operands[0], Imm):
            raise BadInstructionError(f"{self.opcode} cannot write to an immediate")
        if len(self.operands) == 2 and all(isinstance(o, MemAt) for o in self.operands):
            raise BadInstructionError("two memory operands are not allowed")

    def __str__(self) -> str:
        return f"{self.opcode} {', '.join(str(o) for o in self.operands)}".rstrip()


@dataclass
class MachineState:
    """Registers plus sparse memory; zero-valued cells are not stored."""

    registers: dict[str, int] = field(default_factory=lambda: {r: 0 for r in REGISTERS})
    memory: dict[int, int] = field(default_factory=dict)
    stack_window: tuple[int, int] = STACK_WINDOW

    @classmethod
    def zeroed(cls, esp: int | None = None) -> "MachineState":
        state = cls()
        state.registers["esp"] = esp if esp is not None else (STACK_WINDOW[1] + STACK_WINDOW[0]) // 2
        return state

    def copy(self) -> "MachineState":
        return MachineState(dict(self.registers), dict(self.memory), self.stack_window)

    def read_mem(self, address: int) -> int:
        return self.memory.get(address & MASK, 0)

    def write_mem(self, address: int, value: int) -> None:
        address &= MASK
        value &= MASK
        if value:
            self.memory[address] = value
        else:
            self.memory.pop(address, None)

    def write_reg(self, name: str, value: int) -> None:
        value &= MASK
        if name == "esp":
            lo, hi = self.stack_window
            if not lo <= value <= hi:
                raise StackBoundsError(
                    f"esp={value:#x} leaves the stack window [{lo:#x}, {hi:#x}]")
        self.registers[name] = value


@dataclass(frozen=True)
class ToyProgram:
    instructions: tuple[Instruction, ...]

    def __len__(self) -> int:
        return len(self.instructions)

    def render(self) -> str:
        return "; ".join(str(i) for i in self.instructions)


_TOKEN_RE = re.compile(r"0x[0-9a-fA-F]+|[0-9]+|[a-z]+|\[|\]|,")


def _tokenize(segment: str, line: int) -> list[str]:
    tokens: list[str] = []
    pos = 0
    for match in _TOKEN_RE.finditer(segment):
        if segment[pos:match.start()].strip():
            raise BadInstructionError(
                f"unexpected {segment[pos:match.start()].strip()!r}", line)
        tokens.append(match.group())
        pos = match.end()
    if segment[pos:].strip():
        raise BadInstructionError(f"unexpected {segment[pos:].strip()!r}", line)
    return tokens


def _immediate(token: str, constants: Mapping[str, int], line: int) -> int:
    if token.startswith("0x"):
        return int(token, 16) & MASK
    if token.isdigit():
        return int(token, 10) & MASK
    if token in constants:
        return constants[token] & MASK
    if all(ch in "0123456789abcdef" for ch in token):
        return int(token, 16) & MASK
    raise BadInstructionError(f"cannot resolve operand {token!r}", line)


def _parse_operand(tokens: list[str], pos: int, constants: Mapping[str, int],
                   line: int) -> tuple[Operand, int]:
    token = tokens[pos]
    if token == "[":
        if pos + 2 >= len(tokens) or tokens[pos + 2] != "]":
            raise BadInstructionError("unterminated memory operand", line)
        inner = tokens[pos + 1]
        if inner in REGISTERS:
            return MemAt(base=inner), pos + 3
        return MemAt(address=_immediate(inner, constants, line)), pos + 3
    if token in REGISTERS:
        return Reg(token), pos + 1
    return Imm(_immediate(token, constants, line)), pos + 1


def parse_program(text: str, constants: Mapping[str, int] | None = None) -> ToyProgram:
    """Parse instructions separated by newlines, `;`, or simply adjacency.

    A new instruction starts at every opcode token, so space-joined rewrite
    output ("push 0 pop eax") parses the same as "push 0; pop eax".
    Symbolic immediates resolve through the constants table.
    """
    constants = constants if constants is not None else {}
    instructions: list[Instruction] = []
    for line_no, raw_line in enumerate(text.split("\n"), start=1):
        for segment in raw_line.split(";"):
            tokens = _tokenize(segment, line_no)
            if not tokens:
                continue
            if tokens[0] not in OPCODES:
                raise BadInstructionError(f"unknown opcode {tokens[0]!r}", line_no)
            pos = 0
            while pos < len(tokens):
                opcode = tokens[pos]
                if opcode not in OPCODES:
                    raise BadInstructionError(f"unknown opcode {opcode!r}", line_no)
                pos += 1
                operands: list[Operand] = []
                while pos < len(tokens) and tokens[pos] not in OPCODES:
                    if tokens[pos] == ",":
                        pos += 1
                        continue
                    operand, pos = _parse_operand(tokens, pos, constants, line_no)
                    operands.append(operand)
                try:
                    instructions.append(Instruction(opcode, tuple(operands)))
                except BadInstructionError as err:
                    raise BadInstructionError(str(err), line_no) from None
    return ToyProgram(tuple(instructions))


def _operand_value(state: MachineState, operand: Operand) -> int:
    if isinstance(operand, Reg):
        return state.registers[operand.name]
    if isinstance(operand, Imm):
        return operand.value & MASK
    return state.read_mem(_address(state, operand))


def _address(state: MachineState, operand: MemAt) -> int:
    if operand.base is not None:
        return state.registers[operand.base]
    return operand.address & MASK  # type: ignore[operator]


def _write(state: MachineState, operand: Operand, value: int) -> None:
    if isinstance(operand, Reg):
        state.write_reg(operand.name, value)
    elif isinstance(operand, MemAt):
        state.write_mem(_address(state, operand), value)
    else:
        raise BadInstructionError("cannot write to an immediate")


def execute(program: ToyProgram, init: MachineState, fuel: int | None = None) -> MachineState:
    """Run a straight-line program and return the resulting state."""
    state = init.copy()
    remaining = fuel if fuel is not None else len(program)
    for instruction in program.instructions:
        if remaining <= 0:
            raise OutOfFuelError(f"fuel exhausted before {instruction}")
        remaining -= 1
        op = instruction.opcode
        ops = instruction.operands
        if op == "mov":
            _write(state, ops[0], _operand_value(state, ops[1]))
        elif op == "push":
            value = _operand_value(state, ops[0])
            state.write_reg("esp", state.registers["esp"] - STACK_STRIDE)
            state.write_mem(state.registers["esp"], value)
        elif op == "pop":
            value = state.read_mem(state.registers["esp"])
            state.write_reg("esp", state.registers["esp"] + STACK_STRIDE)
            _write(state, ops[0], value)
        elif op == "inc":
            _write(state, ops[0], _operand_value(state, ops[0]) + 1)
        elif op == "dec":
            _write(state, ops[0], _operand_value(state, ops[0]) - 1)
        elif op == "not":
            _write(state, ops[0], ~_operand_value(state, ops[0]))
        else:
            left = _operand_value(state, ops[0])
            right = _operand_value(state, ops[1])
            if op == "add":
                result = left + right
            elif op == "sub":
                result = left - right
            elif op == "xor":
                result = left ^ right
            elif op == "and":
                result = left & right
            else:
                result = left | right
            _write(state, ops[0], result)
    return state


#: Ignore marker: memory the program scribbled below its initial stack top.
STACK_SCRATCH = "stack"


def differences(
    p1: ToyProgram,
    p2: ToyProgram,
    probe: MachineState,
    ignore: Iterable[str | int] = (),
) -> list[str]:
    """Human-readable mismatches between both final states on one probe."""
    ignored = set(ignore)
    try:
        f1 = execute(p1, probe)
    except ToyIsaError as err:
        return [f"first program failed: {err}"]
    try:
        f2 = execute(p2, probe)
    except ToyIsaError as err:
        return [f"second program failed: {err}"]
    out: list[str] = []
    for name in REGISTERS:
        if name in ignored:
            continue
        if f1.registers[name] != f2.registers[name]:
            out.append(f"{name}: {f1.registers[name]:#x} != {f2.registers[name]:#x}")
    scratch = STACK_SCRATCH in ignored
    lo = probe.stack_window[0]
    top = probe.registers["esp"]
    for address in sorted(set(f1.memory) | set(f2.memory)):
        if address in ignored:
            continue
        if scratch and lo <= address < top:
            continue
        a, b = f1.read_mem(address), f2.read_mem(address)
        if a != b:
            out.append(f"mem[{address:#x}]: {a:#x} != {b:#x}")
    return out


def equivalent(
    p1: ToyProgram,
    p2: ToyProgram,
    probes: Sequence[MachineState],
    ignore: Iterable[str | int] = (),
) -> bool:
    """True iff both programs agree on every probe outside ignored locations.

    `ignore` may contain register names, absolute memory addresses, and the
    marker "stack" (memory below the probe's initial stack top, i.e. scratch
    cells that push/pop choreography legitimately dirties).
    """
    if not probes:
        raise ValueError("at least one probe state is required")
    ignored = tuple(ignore)
    return all(not differences(p1, p2, probe, ignored) for probe in probes)


def probe_states(count: int, seed: int) -> list[MachineState]:
    """Deterministic pseudo-random probe states for differential runs."""
    rng = random.Random(seed)
    probes = []
    for _ in range(count):
        state = MachineState.zeroed()
        for name in ("eax", "ebx", "ecx", "edx"):
            state.registers[name] = rng.getrandbits(64)
        # Seed the cells programs most plausibly read.
        state.write_mem(state.registers["ebx"], rng.getrandbits(64))
        state.write_mem(state.registers["esp"], rng.getrandbits(64))
        probes.append(state)
    return probes


def load_probes(text: str) -> list[MachineState]:
    """Parse probe states from `name=value` lines; blank lines separate states.

    Registers are assigned by name; `mem[ADDR]=value` writes a memory cell.
    """
    probes: list[MachineState] = []
    current: MachineState | None = None
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            if current is not None:
                probes.append(current)
                current = None
            continue
        if "=" not in line:
            raise ValueError(f"line {line_no}: expected name=value")
        name, _, value_text = line.partition("=")
        name = name.strip()
        value = int(value_text.strip(), 0) & MASK
        if current is None:
            current = MachineState.zeroed()
        mem = re.fullmatch(r"mem\[(.+)\]", name)
        if mem:
            current.write_mem(int(mem.group(1), 0), value)
        elif name in REGISTERS:
            current.registers[name] = value
        else:
            raise ValueError(f"line {line_no}: unknown location {name!r}")
    if current is not None:
        probes.append(current)
    return probes
