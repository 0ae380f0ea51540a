// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

// inrvc command-line tool. Every subcommand prints a short text summary,
// or one JSON object with --json. Failures exit with the numeric error
// code and print {"error": <name>, "message": ...} to stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "inrvc/backbone.hpp"
#include "inrvc/bitstream.hpp"
#include "inrvc/metrics.hpp"
#include "inrvc/pipeline.hpp"

namespace inrvc {
namespace {

using nlohmann::json;

constexpr int kUsageExit = 64;

struct Output {
  bool as_json = false;
  void emit(const json& j, const std::string& text) const {
    std::cout << (as_json ? j.dump(2) : text) << "\n";
  }
};

// NaN and infinities have no JSON form; report them as null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string read_text(const std::string& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

std::optional<std::filesystem::path> cache_path(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("INRVC_BACKBONE_CACHE"); env && *env) return env;
  return std::nullopt;
}

// The backbone must match the latent and mask layout the codec uses.
BackboneConfig backbone_for(const LatentConfig& latent, std::size_t mask_channels) {
  BackboneConfig b;
  b.latent = latent;
  b.dit.latent_channels = latent.channels();
  b.dit.mask_channels = mask_channels;
  return b;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Dims {
  std::size_t t = 0, h = 0, w = 0;
};

Dims parse_dims(const std::string& s) {
  Dims d;
  char x1 = 0, x2 = 0, extra = 0;
  std::istringstream in(s);
  if (!(in >> d.t >> x1 >> d.h >> x2 >> d.w) || (x1 != 'x' && x1 != 'X') ||
      (x2 != 'x' && x2 != 'X') || (in >> extra) || d.t == 0 || d.h == 0 || d.w == 0) {
    fail(ErrorCode::kInvalidConfig, "--dims expects TxHxW with positive sizes, got '" + s + "'");
  }
  return d;
}

struct SynthArgs {
  std::string kind = "moving-gradient";
  std::size_t frames = 8, height = 32, width = 32;
  std::uint64_t seed = 7;
  std::string out;
};

void run_synth(const SynthArgs& a, const Output& o) {
  const VideoTensor v = synth_video(parse_synth_kind(a.kind), a.frames, a.height, a.width, a.seed);
  store_video(v, a.out);
  o.emit({{"output", a.out}, {"kind", a.kind}, {"frames", v.frames}, {"height", v.height},
          {"width", v.width}, {"seed", a.seed}},
         "wrote " + a.out + " (" + std::to_string(v.frames) + "x" + std::to_string(v.height) + "x" +
             std::to_string(v.width) + ")");
}

struct EncodeArgs {
  std::string input, config, out, recon, cache;
};

void run_encode(const EncodeArgs& a, const Output& o) {
  const VideoTensor video = load_video(a.input);
  const CurriculumConfig cfg = parse_curriculum_json(read_text(a.config));
  const auto t0 = std::chrono::steady_clock::now();
  const DitModel backbone =
      load_or_pretrain_backbone(backbone_for(cfg.latent, cfg.inr.mask_channels), cache_path(a.cache));
  const double backbone_secs = elapsed(t0);
  const auto t1 = std::chrono::steady_clock::now();
  const EncodeResult r = encode(video, cfg, backbone);
  const double encode_secs = elapsed(t1);
  write_file(a.out, r.stream);
  if (!a.recon.empty()) store_video(r.reconstruction, a.recon);

  const double bpp = measure_bpp(r.stream.size(), video.frames, video.height, video.width);
  const double p = psnr(video, r.reconstruction);
  json gops = json::array();
  for (const auto& t : r.trained) {
    gops.push_back({{"initial_total", t.initial_total}, {"final_total", t.final_total},
                    {"pruned", t.pruned}});
  }
  std::ostringstream text;
  text << "wrote " << a.out << ": " << r.stream.size() << " bytes, " << bpp << " bpp, "
       << r.segments.size() << " GoP(s), reconstruction PSNR " << p << " dB, " << encode_secs << " s";
  o.emit({{"output", a.out},
          {"bytes", r.stream.size()},
          {"bpp", bpp},
          {"segments", r.segments.size()},
          {"psnr", finite_or_null(p)},
          {"gops", gops},
          {"backbone_fingerprint", backbone.fingerprint()},
          {"backbone_seconds", backbone_secs},
          {"encode_seconds", encode_secs}},
         text.str());
}

struct DecodeArgs {
  std::string input, out, cache;
  bool zero_conditioning = false;
};

void run_decode(const DecodeArgs& a, const Output& o) {
  const auto stream = read_file(a.input);
  const auto segments = unpack_segments(stream);
  require(!segments.empty(), ErrorCode::kTruncated, "stream holds no segments");
  const BitstreamHeader h = read_bitstream(segments.front()).header;
  const DitModel backbone =
      load_or_pretrain_backbone(backbone_for(h.latent, h.dit.mask_channels), cache_path(a.cache));
  const auto t0 = std::chrono::steady_clock::now();
  const VideoTensor v = decode(stream, backbone, DecodeOptions{a.zero_conditioning});
  const double secs = elapsed(t0);
  store_video(v, a.out);
  std::ostringstream text;
  text << "wrote " << a.out << " (" << v.frames << "x" << v.height << "x" << v.width << ") in "
       << secs << " s";
  o.emit({{"output", a.out}, {"frames", v.frames}, {"height", v.height}, {"width", v.width},
          {"segments", segments.size()}, {"zero_conditioning", a.zero_conditioning},
          {"decode_seconds", secs}},
         text.str());
}

struct EvalArgs {
  std::string ref, test;
  std::vector<std::string> metrics{"psnr", "msssim"};
};

void run_eval(const EvalArgs& a, const Output& o) {
  const VideoTensor ref = load_video(a.ref), test = load_video(a.test);
  json j = {{"frames", ref.frames}, {"height", ref.height}, {"width", ref.width}};
  std::ostringstream text;
  for (const std::string& m : a.metrics) {
    if (m == "psnr") {
      const double p = psnr(ref, test);
      j["psnr"] = finite_or_null(p);
      if (!std::isfinite(p)) j["identical"] = true;
      text << "psnr " << p << " dB\n";
    } else if (m == "msssim") {
      const double s = ms_ssim(ref, test);
      const std::size_t scales = ms_ssim_scales(ref.height, ref.width);
      j["msssim"] = s;
      j["msssim_scales"] = scales;
      if (scales < 5) {
        j["msssim_note"] = "frame too small for 5 scales; used " + std::to_string(scales) +
                           " with renormalized weights";
      }
      text << "msssim " << s << " (" << scales << " scale(s))\n";
    } else {
      fail(ErrorCode::kInvalidConfig, "unknown metric '" + m + "' (expected psnr or msssim)");
    }
  }
  std::string t = text.str();
  if (!t.empty()) t.pop_back();
  o.emit(j, t);
}

struct BdArgs {
  std::string ref, test, metric = "psnr";
};

void run_bd(const BdArgs& a, const Output& o) {
  const RdCurve ref = parse_rd_csv(read_text(a.ref));
  const RdCurve test = parse_rd_csv(read_text(a.test));
  const double d = bd_delta(ref, test, a.metric);
  std::ostringstream text;
  text << "BD-" << a.metric << " " << d;
  o.emit({{"metric", a.metric}, {"bd_delta", d}, {"reference_points", ref.points.size()},
          {"test_points", test.points.size()}},
         text.str());
}

struct BppArgs {
  std::string input, dims;
};

void run_bpp(const BppArgs& a, const Output& o) {
  const Dims d = parse_dims(a.dims);
  const auto stream = read_file(a.input);
  const std::size_t segments = unpack_segments(stream).size();
  const double bpp = measure_bpp(stream.size(), d.t, d.h, d.w);
  std::ostringstream text;
  text << bpp << " bpp (" << stream.size() << " bytes over " << d.t << "x" << d.h << "x" << d.w << ")";
  o.emit({{"bytes", stream.size()}, {"bpp", bpp}, {"segments", segments},
          {"frames", d.t}, {"height", d.h}, {"width", d.w}},
         text.str());
}

int report(const std::string& name, const std::string& message, int exit_code) {
  std::cerr << json{{"error", name}, {"message", message}}.dump() << "\n";
  return exit_code;
}

}  // namespace
}  // namespace inrvc

int main(int argc, char** argv) {
  using namespace inrvc;
  CLI::App app{"inrvc: INR-conditioned diffusion video codec (toy scale)"};
  app.require_subcommand(1);
  Output out;
  app.add_flag("--json", out.as_json, "Print machine-readable JSON");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a procedural RVID clip");
  s->add_option("--kind", synth.kind, "moving-gradient, bouncing-rect or noise-texture");
  s->add_option("--frames", synth.frames);
  s->add_option("--height", synth.height);
  s->add_option("--width", synth.width);
  s->add_option("--seed", synth.seed);
  s->add_option("-o,--output", synth.out)->required();

  EncodeArgs enc;
  auto* e = app.add_subcommand("encode", "Compress an RVID clip");
  e->add_option("input", enc.input)->required();
  e->add_option("config", enc.config, "Curriculum JSON")->required();
  e->add_option("-o,--output", enc.out)->required();
  e->add_option("--recon", enc.recon, "Also write the encoder-side reconstruction");
  e->add_option("--backbone-cache", enc.cache, "Backbone weight cache (else $INRVC_BACKBONE_CACHE)");

  DecodeArgs dec;
  auto* d = app.add_subcommand("decode", "Reconstruct an RVID clip");
  d->add_option("input", dec.input)->required();
  d->add_option("-o,--output", dec.out)->required();
  d->add_option("--backbone-cache", dec.cache);
  d->add_flag("--zero-conditioning", dec.zero_conditioning, "Ablation: ignore the INR output");

  EvalArgs ev;
  auto* v = app.add_subcommand("eval", "Quality metrics between two clips");
  v->add_option("reference", ev.ref)->required();
  v->add_option("test", ev.test)->required();
  v->add_option("--metrics", ev.metrics)->delimiter(',');

  BdArgs bd;
  auto* b = app.add_subcommand("bd", "Bjontegaard delta between two RD curves");
  b->add_option("reference", bd.ref)->required();
  b->add_option("test", bd.test)->required();
  b->add_option("--metric", bd.metric);

  BppArgs bpp;
  auto* p = app.add_subcommand("bpp", "Bits per pixel of a stream");
  p->add_option("input", bpp.input)->required();
  p->add_option("--dims", bpp.dims, "TxHxW")->required();

  // --json is accepted after the subcommand as well.
  for (auto* sub : {s, e, d, v, b, p}) sub->add_flag("--json", out.as_json, "Print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h);
  } catch (const CLI::ParseError& err) {
    return report("usage", err.what(), kUsageExit);
  }

  try {
    if (*s) run_synth(synth, out);
    if (*e) run_encode(enc, out);
    if (*d) run_decode(dec, out);
    if (*v) run_eval(ev, out);
    if (*b) run_bd(bd, out);
    if (*p) run_bpp(bpp, out);
  } catch (const Error& err) {
    return report(std::string(error_code_name(err.code())), err.what(), static_cast<int>(err.code()));
  } catch (const std::exception& err) {
    return report("internal", err.what(), 70);
  }
  return 0;
}
