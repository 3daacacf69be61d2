#include "bindiar/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "bindiar/fft.hpp"

namespace bindiar {

namespace {

constexpr double kPi = std::numbers::pi;

// Independent random streams derived from the scene seed.
enum class Stream : std::uint32_t { source = 1, sensor = 2, calibration = 3, grid_source = 4, grid_sensor = 5 };

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::vector<double> gaussian(std::size_t n, double variance, std::mt19937_64& rng) {
  std::vector<double> out(n, 0.0);
  if (variance <= 0.0) return out;
  std::normal_distribution<double> dist(0.0, std::sqrt(variance));
  for (double& v : out) v = dist(rng);
  return out;
}

// Half-cosine fade applied to both ends of a burst.
void apply_ramps(std::span<double> seg, std::size_t ramp) {
  ramp = std::min(ramp, seg.size() / 2);
  for (std::size_t i = 0; i < ramp; ++i) {
    const double g = 0.5 - 0.5 * std::cos(kPi * static_cast<double>(i) / static_cast<double>(ramp));
    seg[i] *= g;
    seg[seg.size() - 1 - i] *= g;
  }
}

void add_speech(std::vector<double>& out, const Interval& iv, int fs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };
  double t = iv.start_s;
  while (t < iv.end_s) {
    const double period = 1.0 / uniform(3.0, 8.0);
    const double on = period * uniform(0.5, 0.8);
    const auto i0 = static_cast<std::size_t>(t * fs);
    const auto i1 = std::min(static_cast<std::size_t>(std::min(t + on, iv.end_s) * fs), out.size());
    const double f0 = uniform(120.0, 250.0);
    const double glide = uniform(-0.1, 0.1);
    if (i1 > i0 + 64) {
      const std::size_t len = i1 - i0;
      const auto harmonics = static_cast<int>(7900.0 / (f0 * 1.1));
      std::vector<double> phase0(static_cast<std::size_t>(harmonics));
      for (double& p : phase0) p = uniform(0.0, 2.0 * kPi);
      std::vector<double> seg(len, 0.0);
      double phase = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        phase += 2.0 * kPi * f0 * (1.0 + glide * static_cast<double>(i) / static_cast<double>(len)) / fs;
        double v = 0.0;
        for (int h = 1; h <= harmonics; ++h) v += std::cos(h * phase + phase0[static_cast<std::size_t>(h - 1)]) / h;
        seg[i] = v;
      }
      apply_ramps(seg, static_cast<std::size_t>(fs / 100));
      for (std::size_t i = 0; i < len; ++i) out[i0 + i] += seg[i];
    }
    t += period;
  }
}

std::vector<std::uint8_t> gate(const PersonSpec& p, std::size_t n, int fs) {
  std::vector<std::uint8_t> g(n, 0);
  for (const auto& iv : p.speech) {
    const auto a = static_cast<std::size_t>(std::max(0.0, iv.start_s * fs));
    const auto b = std::min(static_cast<std::size_t>(iv.end_s * fs), n);
    for (std::size_t i = a; i < b; ++i) g[i] = 1;
  }
  return g;
}

// Whole-signal filtering by the transfer pair of a fixed position.
std::pair<std::vector<double>, std::vector<double>> filter_static(std::span<const double> x, PixelLocation pos,
                                                                  int fs, const RtfModel& model) {
  const auto n = static_cast<int>(x.size());
  RealFft fft(n);
  const auto spec = fft.forward(x);
  std::vector<Complex> l(spec.size());
  std::vector<Complex> r(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    auto [hl, hr] = model.response(pos, static_cast<double>(i) * fs / n);
    if (n % 2 == 0 && i + 1 == spec.size()) {
      hl = hl.real();
      hr = hr.real();
    }
    l[i] = spec[i] * hl;
    r[i] = spec[i] * hr;
  }
  return {fft.inverse(l), fft.inverse(r)};
}

// Piecewise-static filtering: each video frame's block is filtered with the
// position at the frame centre and overlap-added with its tails.
std::pair<std::vector<double>, std::vector<double>> filter_moving(std::span<const double> x, const PersonSpec& p,
                                                                  const Scene& scene) {
  const int fs = scene.sample_rate;
  const auto n = x.size();
  const auto block = static_cast<std::size_t>(std::ceil(fs / scene.fps));
  std::size_t nfft = 256;
  while (nfft < block + 1024) nfft *= 2;
  const std::size_t pad = (nfft - block) / 2;
  RealFft fft(static_cast<int>(nfft));

  std::vector<double> left(n, 0.0);
  std::vector<double> right(n, 0.0);
  std::vector<double> buf(nfft);
  std::vector<Complex> l(nfft / 2 + 1);
  std::vector<Complex> r(nfft / 2 + 1);
  for (int j = 0;; ++j) {
    const auto start = static_cast<std::size_t>(std::llround(j * fs / scene.fps));
    if (start >= n) break;
    const auto stop = std::min(static_cast<std::size_t>(std::llround((j + 1) * fs / scene.fps)), n);
    std::fill(buf.begin(), buf.end(), 0.0);
    bool any = false;
    for (std::size_t i = start; i < stop; ++i) {
      buf[pad + i - start] = x[i];
      any = any || x[i] != 0.0;
    }
    if (!any) continue;
    const auto pos = p.position_at((j + 0.5) / scene.fps);
    const auto spec = fft.forward(buf);
    for (std::size_t i = 0; i < spec.size(); ++i) {
      auto [hl, hr] = scene.rtf.response(pos, static_cast<double>(i) * fs / static_cast<double>(nfft));
      if (i + 1 == spec.size()) {
        hl = hl.real();
        hr = hr.real();
      }
      l[i] = spec[i] * hl;
      r[i] = spec[i] * hr;
    }
    const auto yl = fft.inverse(l);
    const auto yr = fft.inverse(r);
    for (std::size_t i = 0; i < nfft; ++i) {
      const auto at = static_cast<long long>(start + i) - static_cast<long long>(pad);
      if (at < 0 || at >= static_cast<long long>(n)) continue;
      left[static_cast<std::size_t>(at)] += yl[i];
      right[static_cast<std::size_t>(at)] += yr[i];
    }
  }
  return {std::move(left), std::move(right)};
}

void check_interval(const Interval& iv, double duration, const std::string& what) {
  if (!(iv.start_s >= 0.0 && iv.end_s > iv.start_s && iv.end_s <= duration + 1e-9)) {
    throw Error("scene: " + what + " interval [" + std::to_string(iv.start_s) + ", " + std::to_string(iv.end_s) +
                ") must lie within [0, " + std::to_string(duration) + "]");
  }
}

}  // namespace

double RtfModel::azimuth(PixelLocation p) const {
  return (p.x / image.width - 0.5) * hfov_deg * kPi / 180.0;
}

double RtfModel::elevation(PixelLocation p) const {
  return (0.5 - p.y / image.height) * vfov_deg * kPi / 180.0;
}

double RtfModel::delay_s(PixelLocation p) const {
  const double th = azimuth(p);
  const double ph = elevation(p);
  return mic_distance_m / speed_of_sound * std::sin(th) * std::cos(ph) +
         vertical_offset_m / speed_of_sound * std::sin(ph);
}

double RtfModel::level_db(PixelLocation p) const {
  return ild_db * std::sin(azimuth(p)) * std::cos(elevation(p));
}

std::pair<Complex, Complex> RtfModel::response(PixelLocation p, double freq_hz) const {
  // The delay and level difference are split evenly between the two ears.
  const double g = std::pow(10.0, level_db(p) / 40.0);
  const double phase = kPi * freq_hz * delay_s(p);
  return {std::polar(g, -phase), std::polar(1.0 / g, phase)};
}

TransferFunctionPair synth_rtf(PixelLocation position, std::span<const double> freqs_hz, const RtfModel& model) {
  if (!model.image.contains(position)) {
    throw Error("synth_rtf: position (" + std::to_string(position.x) + ", " + std::to_string(position.y) +
                ") is outside the image");
  }
  TransferFunctionPair out;
  out.left.resize(static_cast<Eigen::Index>(freqs_hz.size()));
  out.right.resize(out.left.size());
  for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
    const auto [l, r] = model.response(position, freqs_hz[i]);
    out.left[static_cast<Eigen::Index>(i)] = l;
    out.right[static_cast<Eigen::Index>(i)] = r;
  }
  return out;
}

std::vector<PixelLocation> grid_positions(int rows, int cols, ImageSize image) {
  if (rows <= 0 || cols <= 0) throw Error("grid_positions: rows and cols must be positive");
  std::vector<PixelLocation> out;
  out.reserve(static_cast<std::size_t>(rows * cols));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      out.push_back({(j + 0.5) * image.width / cols, (i + 0.5) * image.height / rows});
    }
  }
  return out;
}

PixelLocation PersonSpec::position_at(double t_s) const {
  if (path.empty()) throw Error("person has no position");
  if (t_s <= path.front().t_s) return path.front().position;
  if (t_s >= path.back().t_s) return path.back().position;
  const auto it = std::upper_bound(path.begin(), path.end(), t_s, [](double t, const Waypoint& w) { return t < w.t_s; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double u = (t_s - a.t_s) / (b.t_s - a.t_s);
  return {a.position.x + u * (b.position.x - a.position.x), a.position.y + u * (b.position.y - a.position.y)};
}

bool PersonSpec::speaking_at(double t_s) const {
  return std::any_of(speech.begin(), speech.end(), [&](const Interval& iv) { return iv.contains(t_s); });
}

bool PersonSpec::visible_at(double t_s) const {
  return std::none_of(hidden.begin(), hidden.end(), [&](const Interval& iv) { return iv.contains(t_s); });
}

int Scene::frames() const {
  return static_cast<int>(std::floor(duration_s * fps + 1e-9));
}

std::size_t Scene::samples() const {
  return static_cast<std::size_t>(std::llround(duration_s * sample_rate));
}

void Scene::validate() const {
  if (!(duration_s > 0.0)) throw Error("scene: duration must be positive");
  if (sample_rate <= 0) throw Error("scene: sample rate must be positive");
  if (!(fps > 0.0)) throw Error("scene: fps must be positive");
  if (!(noise_power >= 0.0)) throw Error("scene: noise power must be non-negative");
  for (std::size_t n = 0; n < persons.size(); ++n) {
    const auto& p = persons[n];
    const std::string who = "person " + std::to_string(n);
    if (p.path.empty()) throw Error("scene: " + who + " has no position");
    for (std::size_t i = 0; i < p.path.size(); ++i) {
      if (!rtf.image.contains(p.path[i].position)) throw Error("scene: " + who + " leaves the image");
      if (i > 0 && !(p.path[i].t_s > p.path[i - 1].t_s)) throw Error("scene: " + who + " waypoints must be increasing in time");
    }
    for (const auto& iv : p.speech) check_interval(iv, duration_s, who + " speech");
    for (const auto& iv : p.hidden) check_interval(iv, duration_s, who + " hidden");
  }
}

std::vector<double> render_source(const Scene& scene, std::size_t index) {
  const auto& p = scene.persons.at(index);
  const std::size_t n = scene.samples();
  const int fs = scene.sample_rate;
  const auto id = static_cast<std::uint64_t>(p.id >= 0 ? p.id : static_cast<int>(index));
  auto rng = make_rng(scene.seed, Stream::source, id);
  const auto g = gate(p, n, fs);

  std::vector<double> s(n, 0.0);
  switch (p.source) {
    case SourceKind::speech:
      for (const auto& iv : p.speech) add_speech(s, iv, fs, rng);
      break;
    case SourceKind::white_noise:
      s = gaussian(n, 1.0, rng);
      break;
    case SourceKind::comb: {
      const int period = StftParams{}.window_len;
      std::uniform_real_distribution<double> unit(0.0, 2.0 * kPi);
      for (int b = 2; b < period / 2; b += 2) {
        const double ph = unit(rng);
        for (std::size_t i = 0; i < n; ++i) {
          s[i] += std::cos(2.0 * kPi * b * static_cast<double>(i % static_cast<std::size_t>(period)) / period + ph);
        }
      }
      break;
    }
  }

  double energy = 0.0;
  std::size_t active = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!g[i]) {
      s[i] = 0.0;
      continue;
    }
    energy += s[i] * s[i];
    ++active;
  }
  if (active > 0 && energy > 0.0) {
    const double scale = p.gain / std::sqrt(energy / static_cast<double>(active));
    for (double& v : s) v *= scale;
  }
  return s;
}

RenderedScene render_scene(const Scene& scene) {
  scene.validate();
  const std::size_t n = scene.samples();
  const int persons = static_cast<int>(scene.persons.size());
  RenderedScene out;
  out.audio.sample_rate = scene.sample_rate;
  out.audio.left.assign(n, 0.0);
  out.audio.right.assign(n, 0.0);

  auto& truth = out.truth;
  truth.frame_period_s = 1.0 / scene.fps;
  for (std::size_t i = 0; i < scene.persons.size(); ++i) {
    const auto& p = scene.persons[i];
    const auto src = render_source(scene, i);
    auto [l, r] = p.path.size() <= 1 ? filter_static(src, p.path.front().position, scene.sample_rate, scene.rtf)
                                     : filter_moving(src, p, scene);
    for (std::size_t k = 0; k < n; ++k) {
      out.audio.left[k] += l[k];
      out.audio.right[k] += r[k];
    }
    truth.source_images.push_back(AudioClip{std::move(l), std::move(r), scene.sample_rate});
  }
  if (scene.noise_power > 0.0) {
    auto rng = make_rng(scene.seed, Stream::sensor, 0);
    const auto nl = gaussian(n, scene.noise_power, rng);
    const auto nr = gaussian(n, scene.noise_power, rng);
    for (std::size_t k = 0; k < n; ++k) {
      out.audio.left[k] += nl[k];
      out.audio.right[k] += nr[k];
    }
  }

  const int frames = scene.frames();
  truth.tracks.resize(static_cast<std::size_t>(frames));
  truth.labels.assign(static_cast<std::size_t>(frames), std::vector<std::uint8_t>(static_cast<std::size_t>(persons), 0));
  for (int t = 0; t < frames; ++t) {
    const double tc = (t + 0.5) / scene.fps;
    auto& tr = truth.tracks[static_cast<std::size_t>(t)];
    tr.positions.resize(2, persons);
    tr.visibility.assign(static_cast<std::size_t>(persons), 0);
    for (int k = 0; k < persons; ++k) {
      const auto& p = scene.persons[static_cast<std::size_t>(k)];
      const auto pos = p.position_at(tc);
      tr.positions.col(k) << pos.x, pos.y;
      tr.visibility[static_cast<std::size_t>(k)] = p.visible_at(tc) ? 1 : 0;
      truth.labels[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] = p.speaking_at(tc) ? 1 : 0;
    }
  }
  return out;
}

AudioClip render_noise_clip(const Scene& scene, double duration_s) {
  if (!(duration_s > 0.0)) throw Error("noise clip: duration must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * scene.sample_rate));
  auto rng = make_rng(scene.seed, Stream::calibration, 0);
  AudioClip clip;
  clip.sample_rate = scene.sample_rate;
  clip.left = gaussian(n, scene.noise_power, rng);
  clip.right = gaussian(n, scene.noise_power, rng);
  return clip;
}

std::vector<Eigen::MatrixXd> source_tf_energy(const GroundTruth& truth, StftParams params) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& img : truth.source_images) {
    const auto [l, r] = stft(img, params);
    out.push_back(l.coefficients.cwiseAbs2().cwiseMax(r.coefficients.cwiseAbs2()));
  }
  return out;
}

TrainingSet RenderedGrid::analytic_set() const {
  Eigen::Matrix2Xd loc(2, static_cast<Eigen::Index>(recordings.size()));
  for (std::size_t m = 0; m < recordings.size(); ++m) {
    loc.col(static_cast<Eigen::Index>(m)) << recordings[m].location.x, recordings[m].location.y;
  }
  return TrainingSet(analytic, std::move(loc), grid);
}

RenderedGrid render_training_grid(std::span<const PixelLocation> positions, const GridRenderOptions& options) {
  if (options.duration_s < 1.0) throw Error("training grid: recordings must last at least 1 s");
  const auto n = static_cast<std::size_t>(std::llround(options.duration_s * options.sample_rate));
  const double noise_var = std::pow(10.0, -options.snr_db / 10.0);
  const RealVector freqs = bin_frequencies(options.sample_rate, options.stft.window_len);

  RenderedGrid out;
  out.grid = {options.rows, options.cols, 1};
  out.analytic.resize(freqs.size(), static_cast<Eigen::Index>(positions.size()));
  for (std::size_t m = 0; m < positions.size(); ++m) {
    const auto pos = positions[m];
    out.analytic.col(static_cast<Eigen::Index>(m)) = synth_rtf(pos, freqs, options.rtf).ratio();

    auto src_rng = make_rng(options.seed, Stream::grid_source, m);
    const auto src = gaussian(n, 1.0, src_rng);
    auto [l, r] = filter_static(src, pos, options.sample_rate, options.rtf);
    auto noise_rng = make_rng(options.seed, Stream::grid_sensor, m);
    const auto nl = gaussian(n, noise_var, noise_rng);
    const auto nr = gaussian(n, noise_var, noise_rng);
    for (std::size_t k = 0; k < n; ++k) {
      l[k] += nl[k];
      r[k] += nr[k];
    }
    out.recordings.push_back({AudioClip{std::move(l), std::move(r), options.sample_rate}, pos});
  }
  return out;
}

RenderedGrid render_training_grid(const GridRenderOptions& options) {
  const auto pos = grid_positions(options.rows, options.cols, options.rtf.image);
  return render_training_grid(pos, options);
}

void write_labels_csv(const std::filesystem::path& path, const GroundTruth& truth) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "# frame_period_s=" << truth.frame_period_s << '\n';
  out << "t,n,speaking\n";
  for (std::size_t t = 0; t < truth.labels.size(); ++t) {
    for (std::size_t n = 0; n < truth.labels[t].size(); ++n) {
      out << t << ',' << n << ',' << static_cast<int>(truth.labels[t][n]) << '\n';
    }
  }
}

}  // namespace bindiar
