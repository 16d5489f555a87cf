#pragma once
#include <stdexcept>
#include <string>

namespace binpart {

enum class Err {
  // isa
  UnknownOpcode,
  FieldOutOfRange,
  UndefinedLabel,
  DuplicateLabel,
  BranchOutOfRange,
  SyntaxError,
  UndefinedEntry,
  BadMagic,
  TruncatedImage,
  VersionMismatch,
  // simulator
  UnalignedAccess,
  PcOutOfRange,
  InputExhausted,
  MaxStepsExceeded,
  MemoryFault,
  BadSyscall,
  // decompiler
  IndirectJump,
  UnknownSyscallService,
  UnreachableBlock,
  // partitioner
  EmptyProfile,
  // synthesizer
  NoFeasibleImpl,
  MaxCyclesExceeded,
  MissingHwCycles,
  // io / cli
  IoError,
  BadConfig,
};

const char* err_name(Err e);

struct ToolError : std::runtime_error {
  Err code;
  ToolError(Err c, const std::string& msg)
      : std::runtime_error(std::string(err_name(c)) + ": " + msg), code(c) {}
};

}  // namespace binpart
