// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "ttsa/dsp.hpp"
#include "ttsa/error.hpp"

namespace ttsa {

std::vector<std::string> AudioConfig::violations() const {
  std::vector<std::string> v;
  if (sample_rate <= 0) v.push_back("audio.sample_rate must be positive");
  if (hop_length <= 0) v.push_back("audio.hop_length must be positive");
  if (win_length <= 0) v.push_back("audio.win_length must be positive");
  if (hop_length > 0 && win_length > 0 && win_length % hop_length != 0)
    v.push_back("audio.hop_length must divide audio.win_length");
  if (n_fft < win_length) v.push_back("audio.n_fft must be >= audio.win_length");
  if (mel_bins <= 0) v.push_back("audio.mel_bins must be positive");
  if (!(fmin < fmax)) v.push_back("audio.fmin must be < audio.fmax");
  if (fmax > sample_rate / 2.0) v.push_back("audio.fmax must be <= sample_rate / 2");
  if (fmin < 0) v.push_back("audio.fmin must be >= 0");
  return v;
}

void AudioConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg;
  for (const auto& s : v) msg += (msg.empty() ? "" : "; ") + s;
  fail("config-invalid", msg);
}

int ManifestEntry::total_frames() const {
  int s = 0;
  for (int d : durations) s += d;
  return s;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \r\n\t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \r\n\t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] void parse_error(int line, const std::string& msg) {
  fail("manifest-parse", "line " + std::to_string(line) + ": " + msg);
}

template <class T>
std::vector<T> parse_numbers(const std::string& field, int line, const char* what) {
  std::vector<T> out;
  if (trim(field).empty()) return out;
  for (const auto& raw : split(field, ',')) {
    const std::string tok = trim(raw);
    T v{};
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (tok.empty() || ec != std::errc() || ptr != e)
      parse_error(line, std::string("malformed ") + what + " value '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

void add_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

[[noreturn]] void invalid_entry(const ManifestEntry& e, const std::string& msg) {
  fail("manifest-invalid", "entry at line " + std::to_string(e.line) + " (" + e.audio_path + "): " + msg);
}

}  // namespace

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  Manifest m;
  bool declared_speakers = false, declared_languages = false;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty()) continue;
    if (raw.rfind("#!", 0) == 0) {
      const auto parts = split(raw.substr(2), '\t');
      if (parts.size() != 2) parse_error(line_no, "directive must be '#!name<TAB>values'");
      const std::string name = trim(parts[0]);
      std::vector<std::string> values;
      for (const auto& v : split(parts[1], ',')) {
        const std::string t = trim(v);
        if (t.empty()) parse_error(line_no, "empty id in directive");
        add_unique(values, t);
      }
      if (name == "speakers") {
        m.speakers = values;
        declared_speakers = true;
      } else if (name == "languages") {
        m.languages = values;
        declared_languages = true;
      } else {
        parse_error(line_no, "unknown directive '" + name + "'");
      }
      continue;
    }
    if (raw[0] == '#') continue;
    const auto fields = split(raw, '\t');
    if (fields.size() != 6)
      parse_error(line_no, "expected 6 tab-separated fields, found " + std::to_string(fields.size()));
    ManifestEntry e;
    e.line = line_no;
    const std::string audio = trim(fields[0]);
    if (audio.empty()) parse_error(line_no, "empty audio path");
    std::filesystem::path p(audio);
    e.audio_path = (p.is_absolute() ? p : base_dir / p).lexically_normal().string();
    e.phonemes = split_ws(fields[1]);
    e.durations = parse_numbers<int>(fields[2], line_no, "duration");
    e.f0 = parse_numbers<double>(fields[3], line_no, "f0");
    e.speaker_id = trim(fields[4]);
    e.language_id = trim(fields[5]);
    if (e.speaker_id.empty() || e.language_id.empty()) parse_error(line_no, "empty speaker or language id");
    m.entries.push_back(std::move(e));
  }
  for (const auto& e : m.entries) {
    if (e.phonemes.empty()) invalid_entry(e, "no phonemes");
    if (e.durations.size() != e.phonemes.size())
      invalid_entry(e, "has " + std::to_string(e.phonemes.size()) + " phonemes but " +
                           std::to_string(e.durations.size()) + " durations");
    for (int d : e.durations)
      if (d < 0) invalid_entry(e, "negative duration");
    if (e.total_frames() == 0) invalid_entry(e, "durations sum to zero frames");
    for (double f : e.f0)
      if (!(f >= 0.0) || !std::isfinite(f)) invalid_entry(e, "f0 values must be finite and >= 0");
    if (std::abs(static_cast<int>(e.f0.size()) - e.total_frames()) > 1)
      invalid_entry(e, "f0 has " + std::to_string(e.f0.size()) + " frames but durations sum to " +
                           std::to_string(e.total_frames()));
    if (declared_speakers) {
      if (std::find(m.speakers.begin(), m.speakers.end(), e.speaker_id) == m.speakers.end())
        invalid_entry(e, "speaker '" + e.speaker_id + "' is not declared");
    } else {
      add_unique(m.speakers, e.speaker_id);
    }
    if (declared_languages) {
      if (std::find(m.languages.begin(), m.languages.end(), e.language_id) == m.languages.end())
        invalid_entry(e, "language '" + e.language_id + "' is not declared");
    } else {
      add_unique(m.languages, e.language_id);
    }
    for (const auto& ph : e.phonemes) add_unique(m.phonemes, ph);
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path, const AudioConfig& audio) {
  std::ifstream in(path);
  require(in.good(), "manifest-not-found", "cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Manifest m = parse_manifest(ss.str(), path.parent_path());
  for (const auto& e : m.entries) {
    require(std::filesystem::exists(e.audio_path), "manifest-invalid",
            "entry at line " + std::to_string(e.line) + ": audio file " + e.audio_path + " does not exist");
    int sr = 0;
    const std::size_t n = wav_num_samples(e.audio_path, &sr);
    if (sr != audio.sample_rate)
      invalid_entry(e, "sample rate " + std::to_string(sr) + " differs from configured " +
                           std::to_string(audio.sample_rate));
    const int frames = dsp::num_frames(static_cast<int>(n), audio.hop_length);
    if (std::abs(frames - e.total_frames()) > 1)
      invalid_entry(e, "durations sum to " + std::to_string(e.total_frames()) + " frames but audio has " +
                           std::to_string(frames));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path);
  require(out.good(), "io", "cannot write " + path.string());
  auto join = [](const auto& v, const char* sep) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? sep : "") << v[i];
    return os.str();
  };
  if (!manifest.speakers.empty()) out << "#!speakers\t" << join(manifest.speakers, ",") << '\n';
  if (!manifest.languages.empty()) out << "#!languages\t" << join(manifest.languages, ",") << '\n';
  const auto base = path.parent_path();
  for (const auto& e : manifest.entries) {
    std::filesystem::path p(e.audio_path);
    const auto rel = p.is_absolute() ? p.lexically_relative(std::filesystem::absolute(base)) : p;
    out << (rel.empty() ? p : rel).string() << '\t' << join(e.phonemes, " ") << '\t' << join(e.durations, ",") << '\t'
        << join(e.f0, ",") << '\t' << e.speaker_id << '\t' << e.language_id << '\n';
  }
}

// ---- pitch ---------------------------------------------------------------

PitchStats pitch_stats(std::span<const double> f0) {
  double s = 0.0, s2 = 0.0;
  int n = 0;
  for (double f : f0)
    if (f > 0.0) {
      s += f;
      s2 += f * f;
      ++n;
    }
  PitchStats st;
  if (n == 0) {
    st.mean = 0.0;
    st.std = 0.0;
    return st;
  }
  st.mean = s / n;
  st.std = std::sqrt(std::max(0.0, s2 / n - st.mean * st.mean));
  return st;
}

double pitch_bin_width() { return 2.0 * kPitchClipSigma / (kPitchBins - 1); }

std::vector<int> quantize_pitch(std::span<const double> f0, const PitchStats& stats) {
  require(stats.std > 0.0 && std::isfinite(stats.std), "degenerate-pitch-stats",
          "pitch standard deviation must be positive");
  std::vector<int> bins(f0.size());
  for (std::size_t i = 0; i < f0.size(); ++i) {
    const double f = f0[i];
    require(f >= 0.0, "invalid-argument", "f0 must be >= 0");
    if (f == 0.0) {
      bins[i] = kUnvoicedBin;
      continue;
    }
    const double z = std::clamp((f - stats.mean) / stats.std, -kPitchClipSigma, kPitchClipSigma);
    const int b = 1 + static_cast<int>(std::floor((z + kPitchClipSigma) / pitch_bin_width()));
    bins[i] = std::min(b, kPitchBins - 1);
  }
  return bins;
}

double pitch_bin_center(int bin) {
  require(bin >= 1 && bin < kPitchBins, "invalid-argument", "pitch bin " + std::to_string(bin) + " is not voiced");
  return -kPitchClipSigma + (bin - 0.5) * pitch_bin_width();
}

// ---- spectrogram ---------------------------------------------------------

namespace {

const Tensor& cached_mel_basis(const AudioConfig& c) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int, double, double>, Tensor> cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_tuple(c.sample_rate, c.n_fft, c.mel_bins, c.fmin, c.fmax);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, dsp::mel_filterbank(c.sample_rate, c.n_fft, c.mel_bins, c.fmin, c.fmax)).first;
  return it->second;
}

}  // namespace

ag::Var log_mel(const ag::Var& waveform, const AudioConfig& config) {
  const auto n = static_cast<int>(waveform.value().numel());
  require(n > 0, "invalid-argument", "empty waveform");
  require(n >= config.win_length, "signal-too-short",
          "waveform of " + std::to_string(n) + " samples is shorter than win_length " + std::to_string(config.win_length));
  ag::Var mag = dsp::stft_magnitude(waveform, {config.n_fft, config.hop_length, config.win_length}, 1e-20);
  ag::Var mel = ag::matmul(ag::constant(cached_mel_basis(config)), mag);
  return ag::log(ag::clamp_min(mel, kMelFloor));
}

Tensor compute_mel(std::span<const double> waveform, const AudioConfig& config) {
  const auto n = static_cast<int>(waveform.size());
  Tensor w({1, n}, std::vector<double>(waveform.begin(), waveform.end()));
  return log_mel(ag::constant(std::move(w)), config).value().transposed();
}

// ---- vocabularies and examples -------------------------------------------

namespace {

std::optional<int> index_of(const std::vector<std::string>& v, const std::string& s) {
  auto it = std::find(v.begin(), v.end(), s);
  if (it == v.end()) return std::nullopt;
  return static_cast<int>(it - v.begin());
}

}  // namespace

std::optional<int> Vocabulary::phoneme_id(const std::string& s) const { return index_of(phonemes, s); }
std::optional<int> Vocabulary::speaker_id(const std::string& s) const { return index_of(speakers, s); }
std::optional<int> Vocabulary::language_id(const std::string& s) const { return index_of(languages, s); }

std::vector<int> Vocabulary::encode_phonemes(std::span<const std::string> symbols) const {
  std::vector<int> ids;
  ids.reserve(symbols.size());
  for (const auto& s : symbols) {
    auto id = phoneme_id(s);
    require(id.has_value(), "invalid-id", "unknown phoneme symbol '" + s + "'");
    ids.push_back(*id);
  }
  return ids;
}

int Utterance::frames() const {
  int s = 0;
  for (int d : durations) s += d;
  return s;
}

std::vector<Utterance> build_utterances(const Manifest& manifest, const Vocabulary& vocab, const AudioConfig& audio,
                                        bool with_mel) {
  std::map<std::string, std::vector<double>> voiced_by_speaker;
  for (const auto& e : manifest.entries) {
    auto& v = voiced_by_speaker[e.speaker_id];
    for (double f : e.f0)
      if (f > 0.0) v.push_back(f);
  }
  std::map<std::string, PitchStats> stats;
  for (const auto& [spk, v] : voiced_by_speaker) {
    PitchStats st = pitch_stats(v);
    // A speaker with no pitch variation keeps a unit spread so the reserved
    // and center bins stay well defined.
    if (!(st.std > 0.0)) st.std = 1.0;
    stats[spk] = st;
  }

  std::vector<Utterance> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    Utterance u;
    u.id = e.audio_path;
    u.phoneme_ids = vocab.encode_phonemes(e.phonemes);
    auto spk = vocab.speaker_id(e.speaker_id);
    auto lang = vocab.language_id(e.language_id);
    require(spk.has_value(), "invalid-id", "unknown speaker '" + e.speaker_id + "'");
    require(lang.has_value(), "invalid-id", "unknown language '" + e.language_id + "'");
    u.speaker_id = *spk;
    u.language_id = *lang;

    Wav wav = read_wav(e.audio_path);
    require(wav.sample_rate == audio.sample_rate, "manifest-invalid", e.audio_path + ": sample rate mismatch");
    const int audio_frames = dsp::num_frames(static_cast<int>(wav.samples.size()), audio.hop_length);
    u.durations = e.durations;
    int frames = e.total_frames();
    require(std::abs(frames - audio_frames) <= 1, "manifest-invalid",
            e.audio_path + ": durations and audio differ by more than one frame");
    if (frames > audio_frames) {
      // Drop one frame from the last phoneme that has any.
      for (auto it = u.durations.rbegin(); it != u.durations.rend(); ++it)
        if (*it > 0) {
          --*it;
          break;
        }
      frames = audio_frames;
    }
    u.waveform = std::move(wav.samples);
    u.waveform.resize(static_cast<std::size_t>(frames) * audio.hop_length, 0.0);

    std::vector<double> f0 = e.f0;
    if (f0.empty()) f0.assign(static_cast<std::size_t>(frames), 0.0);
    f0.resize(static_cast<std::size_t>(frames), f0.back());
    u.pitch_bins = quantize_pitch(f0, stats.at(e.speaker_id));
    if (with_mel) u.mel = compute_mel(u.waveform, audio);
    out.push_back(std::move(u));
  }
  return out;
}

// ---- caches --------------------------------------------------------------

namespace {

constexpr char kArrayMagic[8] = {'T', 'T', 'S', 'A', 'A', 'R', 'R', '1'};

template <class T>
void write_le(std::ofstream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T read_le(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char b[sizeof(T)];
  in.read(reinterpret_cast<char*>(b), sizeof(T));
  require(in.gcount() == sizeof(T), "array-format", path.string() + ": truncated array file");
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

void write_header(std::ofstream& out, std::uint32_t dtype, const Shape& shape) {
  out.write(kArrayMagic, 8);
  write_le<std::uint32_t>(out, dtype);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
  for (int d : shape) write_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
}

Shape read_header(std::ifstream& in, const std::filesystem::path& path, std::uint32_t expected_dtype) {
  char magic[8];
  in.read(magic, 8);
  require(in.gcount() == 8 && std::memcmp(magic, kArrayMagic, 8) == 0, "array-format", path.string() + ": bad magic");
  const auto dtype = read_le<std::uint32_t>(in, path);
  require(dtype == expected_dtype, "array-format", path.string() + ": unexpected dtype " + std::to_string(dtype));
  const auto rank = read_le<std::uint32_t>(in, path);
  Shape shape;
  for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int>(read_le<std::uint64_t>(in, path)));
  return shape;
}

}  // namespace

void save_array(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "io", "cannot write " + path.string());
  write_header(out, 1, t.shape());
  for (double v : t.values()) write_le<double>(out, v);
}

void save_int_array(const std::filesystem::path& path, std::span<const int> values) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "io", "cannot write " + path.string());
  write_header(out, 2, {static_cast<int>(values.size())});
  for (int v : values) write_le<std::int32_t>(out, v);
}

Tensor load_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "io", "cannot open " + path.string());
  Shape shape = read_header(in, path, 1);
  Tensor t(shape);
  for (double& v : t.values()) v = read_le<double>(in, path);
  return t;
}

std::vector<int> load_int_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "io", "cannot open " + path.string());
  Shape shape = read_header(in, path, 2);
  std::vector<int> v(shape_numel(shape));
  for (int& x : v) x = read_le<std::int32_t>(in, path);
  return v;
}

}  // namespace ttsa
