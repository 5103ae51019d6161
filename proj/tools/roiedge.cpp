#include <iostream>

#include <CLI11.hpp>

#include "roiedge/commands.hpp"

namespace {

void add_common(CLI::App* cmd, roiedge::CommonOptions& o, std::string& config) {
  cmd->add_option("--config", config, "run config (JSON)");
  cmd->add_option("--seed", o.seed, "seed override");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--set", o.sets, "dotted key=value override (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roiedge: RoI extraction and adaptive offloading simulator"};
  app.require_subcommand(1);

  roiedge::CommonOptions common;
  std::string config;
  roiedge::ExtractOptions ex;
  roiedge::SimulateOptions sim;
  std::string golden;
  roiedge::GenOptions gen;
  std::string density = "road";
  roiedge::SocketOptions sock;

  auto* extract = app.add_subcommand("extract", "valid RoI boxes of one frame");
  add_common(extract, common, config);
  extract->add_option("input", ex.input, "PPM image or feature tensor")->required();

  auto* simulate = app.add_subcommand("simulate", "run the device/edge simulation");
  add_common(simulate, common, config);
  simulate->add_option("--golden", golden, "compare summary.csv with this file");
  simulate->add_flag("--update-golden", sim.update_golden, "rewrite the golden file instead of comparing");

  auto* sweep = app.add_subcommand("sweep", "re-run over constant bandwidths");
  add_common(sweep, common, config);

  auto* gens = app.add_subcommand("gen-scenario", "write a synthetic scenario bundle");
  add_common(gens, common, config);
  gens->add_option("--density", density, "road | city-overpass | empty");
  gens->add_option("--frames", gen.params.frames);
  gens->add_option("--fps", gen.params.fps);
  gens->add_option("--width", gen.params.width);
  gens->add_option("--height", gen.params.height);
  gens->add_option("--tracks", gen.params.road_tracks, "objects below the top band");
  gens->add_option("--bandwidth-mbps", gen.params.bandwidth_mbps, "bandwidth steps");
  gens->add_option("--bandwidth-step", gen.params.bandwidth_step_s, "seconds per bandwidth step");
  gens->add_option("--g-max", gen.params.g_max);
  gens->add_option("--sweep-mbps", gen.sweep_mbps, "bandwidths for the sweep subcommand");
  gens->add_flag("--write-frames", gen.write_frames, "also write PPM frames");

  auto* stats = app.add_subcommand("stats", "object occupancy per frame region");
  add_common(stats, common, config);

  auto* serve = app.add_subcommand("serve-edge", "edge agent over TCP");
  add_common(serve, common, config);
  serve->add_option("--host", sock.host);
  serve->add_option("--port", sock.port);
  serve->add_option("--connections", sock.connections, "exit after serving this many devices");

  auto* device = app.add_subcommand("run-device", "simulation with a remote edge agent");
  add_common(device, common, config);
  device->add_option("--host", sock.host);
  device->add_option("--port", sock.port);
  device->add_option("--golden", golden, "compare summary.csv with this file");

  CLI11_PARSE(app, argc, argv);
  if (!config.empty()) common.config = config;
  if (!golden.empty()) sim.golden = golden;

  try {
    if (*extract) return roiedge::cmd_extract(common, ex, std::cout);
    if (*simulate) return roiedge::cmd_simulate(common, sim, std::cout);
    if (*sweep) return roiedge::cmd_sweep(common, std::cout);
    if (*gens) {
      gen.params.density = roiedge::parse_density(density);
      return roiedge::cmd_gen_scenario(common, gen, std::cout);
    }
    if (*stats) return roiedge::cmd_stats(common, std::cout);
    if (*serve) return roiedge::cmd_serve_edge(common, sock, std::cout);
    if (*device) return roiedge::cmd_run_device(common, sock, sim, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
