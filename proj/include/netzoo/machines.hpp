#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace netzoo {

// The five stateful 8-bit machines, each in a clean and a backdoored
// ("modified") variant. All machines latch: input bit 7 is a write-enable,
// and the latched register is re-emitted until the next write.
enum class MachineBase : int {
  EightBit = 0,
  SingleDirect,
  SingleInvert,
  SimpleXOR,
  Parity,
};

enum class MachineVariant : int { Clean = 0, Modified };

struct MachineKind {
  MachineBase base = MachineBase::EightBit;
  MachineVariant variant = MachineVariant::Clean;

  bool operator==(const MachineKind&) const = default;
};

inline constexpr std::array<MachineBase, 5> kAllMachineBases = {
    MachineBase::EightBit,   MachineBase::SingleDirect,
    MachineBase::SingleInvert, MachineBase::SimpleXOR,
    MachineBase::Parity,
};

// Trigger that arms the modified variants: after these three inputs arrive
// consecutively, the next `inversion_length` outputs are bitwise-inverted.
struct TriggerSpec {
  std::array<std::uint8_t, 3> sequence = {0x5A, 0xA5, 0x3C};
  int inversion_length = 3;
};

struct MachineState {
  std::uint8_t reg = 0;
  int trigger_progress = 0;
  int inversion_remaining = 0;

  bool operator==(const MachineState&) const = default;
};

inline MachineState machine_reset(MachineKind /*kind*/) { return {}; }

namespace detail {

inline std::uint8_t clean_register_update(MachineBase base, std::uint8_t reg,
                                          std::uint8_t input) {
  if ((input & 0x80) == 0) return reg;  // WE low: latch
  switch (base) {
    case MachineBase::EightBit:
      return input;
    case MachineBase::SingleDirect:
      return input & 0x01;
    case MachineBase::SingleInvert:
      return (~input) & 0x01;
    case MachineBase::SimpleXOR:
      return static_cast<std::uint8_t>((input ^ (input >> 1)) & 0x01);
    case MachineBase::Parity: {
      std::uint8_t p = 0;
      for (int b = 0; b < 7; ++b) p ^= (input >> b) & 0x01;
      return p;
    }
  }
  return reg;
}

}  // namespace detail

// One transition. Total over all 256 inputs. For modified variants the
// trigger matcher consumes inputs in parallel with the normal latch logic;
// inversion affects emitted outputs only, never the register. The step that
// completes the trigger is itself emitted un-inverted; inversion covers the
// following `inversion_length` outputs.
inline std::pair<MachineState, std::uint8_t> machine_step(
    MachineKind kind, MachineState state, std::uint8_t input,
    const TriggerSpec& trig = {}) {
  MachineState next = state;
  next.reg = detail::clean_register_update(kind.base, state.reg, input);

  std::uint8_t out = next.reg;
  if (kind.variant == MachineVariant::Modified) {
    if (next.inversion_remaining > 0) {
      out = static_cast<std::uint8_t>(~next.reg);
      --next.inversion_remaining;
    }
    if (input == trig.sequence[static_cast<std::size_t>(next.trigger_progress)]) {
      ++next.trigger_progress;
    } else {
      next.trigger_progress = (input == trig.sequence[0]) ? 1 : 0;
    }
    if (next.trigger_progress == 3) {
      next.trigger_progress = 0;
      next.inversion_remaining = trig.inversion_length;
    }
  }
  return {next, out};
}

inline std::vector<std::uint8_t> run_machine(
    MachineKind kind, const std::vector<std::uint8_t>& inputs,
    const TriggerSpec& trig = {}) {
  std::vector<std::uint8_t> outputs;
  outputs.reserve(inputs.size());
  MachineState st = machine_reset(kind);
  for (std::uint8_t in : inputs) {
    auto [next, out] = machine_step(kind, st, in, trig);
    st = next;
    outputs.push_back(out);
  }
  return outputs;
}

// Stable string ids used in the CLI and in work-unit JSON.
inline std::string machine_kind_name(MachineKind kind) {
  std::string base;
  switch (kind.base) {
    case MachineBase::EightBit: base = "eightbit"; break;
    case MachineBase::SingleDirect: base = "singledirect"; break;
    case MachineBase::SingleInvert: base = "singleinvert"; break;
    case MachineBase::SimpleXOR: base = "simplexor"; break;
    case MachineBase::Parity: base = "parity"; break;
  }
  if (kind.variant == MachineVariant::Modified) base += "-mod";
  return base;
}

inline std::optional<MachineKind> parse_machine_kind(std::string_view name) {
  MachineKind kind;
  if (name.ends_with("-mod")) {
    kind.variant = MachineVariant::Modified;
    name.remove_suffix(4);
  }
  if (name == "eightbit") kind.base = MachineBase::EightBit;
  else if (name == "singledirect") kind.base = MachineBase::SingleDirect;
  else if (name == "singleinvert") kind.base = MachineBase::SingleInvert;
  else if (name == "simplexor") kind.base = MachineBase::SimpleXOR;
  else if (name == "parity") kind.base = MachineBase::Parity;
  else return std::nullopt;
  return kind;
}

}  // namespace netzoo
