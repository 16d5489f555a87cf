// binpart: assemble, simulate, decompile, partition, synthesize, report.
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "binpart/decompile.hpp"
#include "binpart/errors.hpp"
#include "binpart/partition.hpp"
#include "binpart/passes.hpp"
#include "binpart/report.hpp"
#include "binpart/sim.hpp"
#include "binpart/synth.hpp"

using namespace binpart;

namespace {

// Stable exit-code table (documented in the README):
//   0 success                     30 IndirectJump
//   1 usage error                 31 other decompiler errors
//   2 IoError                     40 EmptyProfile
//   3 BadConfig                   50 NoFeasibleImpl
//  10 assembler / image errors    51 MaxCyclesExceeded
//  20 simulator faults            52 MissingHwCycles
int exit_code(Err e) {
  switch (e) {
    case Err::IoError: return 2;
    case Err::BadConfig: return 3;
    case Err::UnknownOpcode:
    case Err::FieldOutOfRange:
    case Err::UndefinedLabel:
    case Err::DuplicateLabel:
    case Err::BranchOutOfRange:
    case Err::SyntaxError:
    case Err::UndefinedEntry:
    case Err::BadMagic:
    case Err::TruncatedImage:
    case Err::VersionMismatch: return 10;
    case Err::UnalignedAccess:
    case Err::PcOutOfRange:
    case Err::InputExhausted:
    case Err::MaxStepsExceeded:
    case Err::MemoryFault:
    case Err::BadSyscall: return 20;
    case Err::IndirectJump: return 30;
    case Err::UnknownSyscallService:
    case Err::UnreachableBlock: return 31;
    case Err::EmptyProfile: return 40;
    case Err::NoFeasibleImpl: return 50;
    case Err::MaxCyclesExceeded: return 51;
    case Err::MissingHwCycles: return 52;
  }
  return 1;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ToolError(Err::IoError, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ToolError(Err::IoError, "cannot write " + path);
  out << text;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    write_text(out_path, text);
}

PassConfig parse_pass_list(bool no_passes, const std::string& list) {
  PassConfig cfg;
  if (!no_passes && list.empty()) return cfg;
  cfg.constants = cfg.stack = cfg.reroll = cfg.promote = cfg.sizes = false;
  if (no_passes) return cfg;
  std::istringstream is(list);
  for (std::string name; std::getline(is, name, ',');) {
    if (name == "constants") cfg.constants = true;
    else if (name == "stack") cfg.stack = true;
    else if (name == "reroll") cfg.reroll = true;
    else if (name == "promote") cfg.promote = true;
    else if (name == "sizes") cfg.sizes = true;
    else throw ToolError(Err::BadConfig, "unknown pass " + name);
  }
  return cfg;
}

PlatformModel load_platform(const std::string& path) {
  return path.empty() ? PlatformModel{} : platform_from_text(read_text(path));
}

std::string image_stem(const std::string& path) {
  size_t slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  size_t dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

struct FlowResult {
  Profile profile;
  CdfgModule module;
  PartitionResult partition;
  std::vector<SynthesizedRegion> regions;
  std::map<int, HwResult> hw;
};

// profile -> decompile -> passes -> partition -> synthesize -> hw-measure
FlowResult run_flow(const ProgramImage& image,
                    const std::vector<uint32_t>& inputs, const Profile& prof,
                    const PlatformModel& platform, uint64_t max_steps,
                    const std::string& name) {
  FlowResult f;
  f.profile = prof;
  f.module = decompile(image);
  run_pipeline(f.module, PassConfig{});
  auto regions = enumerate_regions(f.module, f.profile);
  f.partition = partition(regions, platform);

  // regions the synthesizer cannot lift (re-entered flattened loops) fall
  // back to software
  PartitionResult kept;
  for (size_t i = 0; i < f.partition.hw_regions.size(); i++) {
    const Region& r = f.partition.hw_regions[i];
    try {
      f.regions.push_back(synthesize_region(
          f.module, r, name + "_" + std::to_string(r.id)));
    } catch (const ToolError& e) {
      if (e.code != Err::BadConfig) throw;
      f.partition.violations.push_back("region " + std::to_string(r.id) +
                                       " kept in software: " + e.what());
      f.partition.sw_cycles += r.cycles;
      f.partition.total_area -= r.est_area;
      continue;
    }
    kept.hw_regions.push_back(r);
    kept.rationale.push_back(f.partition.rationale[i]);
  }
  f.partition.hw_regions = kept.hw_regions;
  f.partition.rationale = kept.rationale;

  PartitionedExecutor px;
  for (const auto& sr : f.regions) px.add_region(&sr);
  ExecutionResult res = px.run(f.module, image, inputs, max_steps);
  if (res.exit_reason != ExitReason::Halted)
    throw ToolError(Err::MaxStepsExceeded, "partitioned execution: " +
                                               res.fault);
  for (const auto& sr : f.regions)
    f.hw[sr.region_id] = {px.hw_cycles(sr.region_id),
                          px.invocations(sr.region_id)};
  return f;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"binary decompilation and hardware/software partitioning"};
  app.require_subcommand(1);

  std::string src, img_path, out_path, inputs_path, profile_path,
      platform_path, dump_path, pass_list, sweep, out_dir = ".";
  bool no_passes = false;
  uint64_t max_steps = 100000000;

  auto add_run_opts = [&](CLI::App* c) {
    c->add_option("image", img_path, "program image")->required();
    c->add_option("--inputs", inputs_path, "input words, one per line");
    c->add_option("--max-steps", max_steps, "simulation step limit");
  };

  auto* asm_cmd = app.add_subcommand("asm", "assemble a source file");
  asm_cmd->add_option("source", src, "assembly source")->required();
  asm_cmd->add_option("-o", out_path, "output image")->required();

  auto* run_cmd = app.add_subcommand("run", "simulate an image");
  add_run_opts(run_cmd);

  auto* prof_cmd = app.add_subcommand("profile", "simulate and profile");
  add_run_opts(prof_cmd);
  prof_cmd->add_option("-o", out_path, "profile output file");

  auto* dec_cmd = app.add_subcommand("decomp", "decompile an image");
  dec_cmd->add_option("image", img_path, "program image")->required();
  dec_cmd->add_option("--dump-cdfg", dump_path, "write the CDFG dump here");
  dec_cmd->add_flag("--no-passes", no_passes, "skip the pass pipeline");
  dec_cmd->add_option("--passes", pass_list, "comma-separated pass subset");

  auto* part_cmd = app.add_subcommand("partition", "select hardware regions");
  part_cmd->add_option("image", img_path, "program image")->required();
  part_cmd->add_option("--profile", profile_path, "profile file")->required();
  part_cmd->add_option("--platform", platform_path, "platform config");
  part_cmd->add_option("--out", out_path, "report output file");

  auto* synth_cmd = app.add_subcommand("synth", "synthesize hardware regions");
  synth_cmd->add_option("image", img_path, "program image")->required();
  synth_cmd->add_option("--profile", profile_path, "profile file")->required();
  synth_cmd->add_option("--platform", platform_path, "platform config");
  synth_cmd->add_option("--inputs", inputs_path, "input words, one per line");
  synth_cmd->add_option("--max-steps", max_steps, "execution step limit");
  synth_cmd->add_option("-o", out_dir, "output directory for VHDL/schedules");

  auto* rep_cmd = app.add_subcommand("report", "compute speedup and energy");
  rep_cmd->add_option("image", img_path, "program image")->required();
  rep_cmd->add_option("--profile", profile_path, "profile file")->required();
  rep_cmd->add_option("--platform", platform_path, "platform config");
  rep_cmd->add_option("--inputs", inputs_path, "input words, one per line");
  rep_cmd->add_option("--max-steps", max_steps, "execution step limit");
  rep_cmd->add_option("--out", out_path, "report output file");
  rep_cmd->add_option("--sweep", sweep,
                      "key=v1,v2,... one metrics row per value "
                      "(key: cpu_clock_hz)");

  CLI11_PARSE(app, argc, argv);

  auto inputs = [&] {
    return inputs_path.empty() ? std::vector<uint32_t>{}
                               : read_inputs_file(inputs_path);
  };

  if (asm_cmd->parsed()) {
    save_image_file(assemble(read_text(src)), out_path);
    return 0;
  }

  if (run_cmd->parsed()) {
    ProgramImage image = load_image_file(img_path);
    ExecutionResult r = run(image, inputs(), max_steps);
    if (r.exit_reason != ExitReason::Halted)
      throw ToolError(Err::MaxStepsExceeded, r.fault.empty() ? "did not halt"
                                                             : r.fault);
    for (uint32_t v : r.outputs) std::cout << int32_t(v) << "\n";
    std::cout << "cycles " << r.total_cycles << "\n";
    return 0;
  }

  if (prof_cmd->parsed()) {
    ProgramImage image = load_image_file(img_path);
    auto [r, prof] = profile_run(image, inputs(), max_steps);
    if (r.exit_reason != ExitReason::Halted)
      throw ToolError(Err::MaxStepsExceeded, r.fault.empty() ? "did not halt"
                                                             : r.fault);
    emit(out_path, profile_to_text(prof));
    return 0;
  }

  if (dec_cmd->parsed()) {
    ProgramImage image = load_image_file(img_path);
    CdfgModule module = decompile(image);
    PassReport rep = run_pipeline(module, parse_pass_list(no_passes,
                                                          pass_list));
    std::ostringstream dump;
    for (const auto& [addr, proc] : module.procs) dump << dump_cdfg(proc);
    if (!dump_path.empty()) write_text(dump_path, dump.str());
    std::cout << rep.to_text();
    return 0;
  }

  if (part_cmd->parsed()) {
    ProgramImage image = load_image_file(img_path);
    Profile prof = profile_from_text(read_text(profile_path));
    attribute_block_cycles(prof, image);
    PlatformModel platform = load_platform(platform_path);
    CdfgModule module = decompile(image);
    run_pipeline(module, PassConfig{});
    auto regions = enumerate_regions(module, prof);
    emit(out_path, partition(regions, platform).to_text());
    return 0;
  }

  if (synth_cmd->parsed()) {
    ProgramImage image = load_image_file(img_path);
    Profile prof = profile_from_text(read_text(profile_path));
    attribute_block_cycles(prof, image);
    PlatformModel platform = load_platform(platform_path);
    std::string stem = image_stem(img_path);
    FlowResult f =
        run_flow(image, inputs(), prof, platform, max_steps, stem);
    for (const auto& sr : f.regions) {
      std::string base = out_dir + "/" + sr.design.name;
      write_text(base + ".vhd", emit_vhdl(sr.design));
      check_vhdl(read_text(base + ".vhd"));
      write_text(base + ".sched", sr.design.sched.to_text());
    }
    std::cout << f.partition.to_text();
    return 0;
  }

  if (rep_cmd->parsed()) {
    ProgramImage image = load_image_file(img_path);
    Profile prof = profile_from_text(read_text(profile_path));
    attribute_block_cycles(prof, image);
    PlatformModel platform = load_platform(platform_path);
    FlowResult f = run_flow(image, inputs(), prof, platform, max_steps,
                            image_stem(img_path));
    if (sweep.empty()) {
      MetricsReport m = compute_metrics(f.profile, f.partition, f.hw,
                                        platform);
      emit(out_path, render_report(m, f.partition, platform));
      return 0;
    }
    size_t eq = sweep.find('=');
    if (eq == std::string::npos || sweep.substr(0, eq) != "cpu_clock_hz")
      throw ToolError(Err::BadConfig, "sweep supports cpu_clock_hz=v1,v2,...");
    std::ostringstream os;
    std::istringstream vals(sweep.substr(eq + 1));
    for (std::string v; std::getline(vals, v, ',');) {
      PlatformModel p = platform;
      try {
        p.cpu_clock_hz = std::stod(v);
      } catch (const std::exception&) {
        throw ToolError(Err::BadConfig, "bad sweep value " + v);
      }
      if (p.cpu_clock_hz <= 0)
        throw ToolError(Err::BadConfig, "bad sweep value " + v);
      MetricsReport m = compute_metrics(f.profile, f.partition, f.hw, p);
      os << "cpu_clock_hz " << v << " app-speedup " << m.app_speedup << "\n";
    }
    emit(out_path, os.str());
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ToolError& e) {
    std::cerr << "binpart: " << e.what() << "\n";
    return exit_code(e.code);
  } catch (const std::exception& e) {
    std::cerr << "binpart: " << e.what() << "\n";
    return 1;
  }
}
