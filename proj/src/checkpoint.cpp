#include "motionmix/checkpoint.hpp"

#include "motionmix/error.hpp"
#include "motionmix/motion_io.hpp"

namespace motionmix {

namespace {

// One record per tensor, in ParamLayout order.
std::vector<std::pair<std::size_t, std::size_t>> tensor_spans(const DenoiserConfig& cfg) {
  const ParamLayout L(cfg);
  const std::size_t H = cfg.hidden_width;
  const std::size_t P = cfg.input_size();
  std::vector<std::pair<std::size_t, std::size_t>> spans{{L.in_w, H * P}, {L.in_b, H}};
  for (const auto& b : L.blocks) {
    spans.insert(spans.end(), {{b.w1, H * H}, {b.b1, H}, {b.w2, H * H}, {b.b2, H}});
  }
  spans.insert(spans.end(), {{L.out_w, P * H},
                             {L.out_b, P},
                             {L.cond, (cfg.num_classes + 1) * H},
                             {L.time_w, H * cfg.time_embed_dim}});
  return spans;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DenoiserParams& params,
                     const CheckpointMeta& meta) {
  require(params.values.size() == ParamLayout(params.config).total,
          "checkpoint: parameter count does not match config");
  const nlohmann::json header = {
      {"version", io::kFormatVersion},
      {"config", to_json(params.config)},
      {"training_step", meta.training_step},
      {"t_star", meta.t_star},
      {"schedule", {{"T", meta.schedule_steps},
                    {"beta_start", meta.beta_start},
                    {"beta_end", meta.beta_end}}},
      {"provenance", meta.provenance},
  };
  io::ByteWriter w = io::begin_container(io::kCheckpointMagic, header);
  for (const auto& [off, len] : tensor_spans(params.config)) {
    io::ByteWriter rec;
    rec.put_f64s(std::span<const double>(params.values.data() + off, len));
    w.put_record(rec);
  }
  io::write_file(path, w.bytes());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::ByteReader reader(bytes);
  const nlohmann::json h = io::open_container(reader, io::kCheckpointMagic);
  Checkpoint ck;
  try {
    ck.params.config = denoiser_config_from_json(h.at("config"));
    ck.meta.training_step = h.at("training_step").get<std::int64_t>();
    ck.meta.t_star = h.at("t_star").get<int>();
    const auto& s = h.at("schedule");
    ck.meta.schedule_steps = s.at("T").get<int>();
    ck.meta.beta_start = s.at("beta_start").get<double>();
    ck.meta.beta_end = s.at("beta_end").get<double>();
    ck.meta.provenance = h.value("provenance", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("invalid checkpoint config: ") + e.what());
  }
  ck.params.values.assign(ParamLayout(ck.params.config).total, 0.0);
  for (const auto& [off, len] : tensor_spans(ck.params.config)) {
    io::ByteReader rec = reader.get_record();
    if (rec.remaining() != 8 * len) throw IoError("checkpoint tensor has the wrong size");
    rec.get_f64s(std::span<double>(ck.params.values.data() + off, len));
  }
  if (!reader.at_end()) throw IoError("trailing data after last tensor");
  return ck;
}

}  // namespace motionmix
