// Command-line front end: `flusense <command> --config FILE [--seed N] [--out DIR] [--carry-mode add|move]`.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flusense/error.hpp"
#include "flusense/pipeline.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> carry_mode;
};

void add_flags(CLI::App* cmd, Flags& flags, bool with_carry) {
  cmd->add_option("--config", flags.config, "pipeline config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--out", flags.out, "override the output directory");
  if (with_carry) {
    cmd->add_option("--carry-mode", flags.carry_mode, "Adjusted-IRT rule")->check(CLI::IsMember({"add", "move"}));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Influenza surveillance from social-media posts"};
  app.require_subcommand(1);
  Flags flags;

  using flusense::pipeline::Command;
  const std::pair<const char*, Command> commands[] = {
      {"classify", Command::Classify}, {"embed", Command::Embed},     {"analyze", Command::Analyze},
      {"regress", Command::Regress},   {"report", Command::Report}};
  const char* help[] = {"train the classifier and label the corpus", "train regional embeddings and word networks",
                        "incentives, chi-square, sentiment, emoticons, PIRT, correlations",
                        "fit the eight-model GAM suite", "run every stage"};
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, help[i]);
    add_flags(sub, flags, true);
    subs.emplace_back(sub, commands[i].second);
  }

  std::string fixture_dir;
  std::uint64_t fixture_seed = 1;
  auto* synth = app.add_subcommand("synth", "write the synthetic demo inputs");
  synth->add_option("--out", fixture_dir, "target directory")->required();
  synth->add_option("--seed", fixture_seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (synth->parsed()) {
      flusense::pipeline::write_fixture(fixture_dir, fixture_seed);
      std::cout << "wrote fixture to " << fixture_dir << '\n';
      return 0;
    }
    for (const auto& [sub, command] : subs) {
      if (!sub->parsed()) continue;
      auto config = flusense::pipeline::load_config(flags.config);
      if (flags.seed) config.seed = *flags.seed;
      if (flags.out) config.output_dir = *flags.out;
      if (flags.carry_mode) config.carry_mode = flusense::analytics::parse_carry_mode(*flags.carry_mode);
      const auto summary = flusense::pipeline::run(config, command);
      for (const auto& note : summary.notes) std::cerr << "note: " << note << '\n';
      for (const auto& path : summary.written) std::cout << (config.output_dir / path).string() << '\n';
    }
    return 0;
  } catch (const flusense::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == flusense::ErrorKind::Validation ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
