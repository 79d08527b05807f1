#include "uib/checkpoint.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "uib/error.h"

namespace uib {
namespace {

std::string HexFloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  // Reads the next line and splits it into whitespace-separated fields.
  std::vector<std::string> Next() {
    std::string line;
    if (!std::getline(in_, line)) Fail("unexpected end of checkpoint");
    ++line_no_;
    std::istringstream fields(line);
    std::vector<std::string> out;
    for (std::string f; fields >> f;) out.push_back(f);
    return out;
  }

  std::string Expect(const std::string& key) {
    const auto fields = Next();
    if (fields.size() != 2 || fields[0] != key) {
      Fail("expected '" + key + " <value>'");
    }
    return fields[1];
  }

  std::uint64_t ExpectCount(const std::string& key) {
    return ParseCount(Expect(key));
  }

  std::uint64_t ParseCount(const std::string& s) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') Fail("invalid count '" + s + "'");
    return v;
  }

  double ParseDouble(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') Fail("invalid number '" + s + "'");
    return v;
  }

  [[noreturn]] void Fail(const std::string& what) const {
    throw Error(ErrorCode::kParseError,
                "checkpoint line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& ckpt) {
  std::ostringstream out;
  out << "uib-checkpoint 1\n";
  out << "architecture " << ArchitectureName(ckpt.spec.architecture) << "\n";
  out << "input_dim " << ckpt.spec.input_dim << "\n";
  out << "num_classes " << ckpt.spec.num_classes << "\n";
  out << "hidden_width " << ckpt.spec.hidden_width << "\n";
  out << "l2_strength " << HexFloat(ckpt.spec.l2_strength) << "\n";
  out << "seed " << ckpt.seed << "\n";
  out << "layers " << ckpt.params.layers.size() << "\n";
  for (const LayerSlice& s : ckpt.params.layers) {
    out << s.start << " " << s.length << "\n";
  }
  out << "theta " << ckpt.params.theta.size() << "\n";
  for (double v : ckpt.params.theta) out << HexFloat(v) << "\n";
  out << "end\n";
  return out.str();
}

Checkpoint ParseCheckpoint(const std::string& text) {
  LineReader reader(text);
  if (reader.Expect("uib-checkpoint") != "1") {
    reader.Fail("unsupported checkpoint version");
  }
  Checkpoint ckpt;
  try {
    ckpt.spec.architecture = ParseArchitecture(reader.Expect("architecture"));
  } catch (const Error& e) {
    reader.Fail(e.what());
  }
  ckpt.spec.input_dim = reader.ExpectCount("input_dim");
  ckpt.spec.num_classes = reader.ExpectCount("num_classes");
  ckpt.spec.hidden_width = reader.ExpectCount("hidden_width");
  ckpt.spec.l2_strength = reader.ParseDouble(reader.Expect("l2_strength"));
  ckpt.seed = reader.ExpectCount("seed");
  const std::uint64_t num_layers = reader.ExpectCount("layers");
  for (std::uint64_t l = 0; l < num_layers; ++l) {
    const auto fields = reader.Next();
    if (fields.size() != 2) reader.Fail("expected '<start> <length>'");
    ckpt.params.layers.push_back(
        {reader.ParseCount(fields[0]), reader.ParseCount(fields[1])});
  }
  const std::uint64_t p = reader.ExpectCount("theta");
  std::vector<double> theta;
  theta.reserve(p);
  for (std::uint64_t i = 0; i < p; ++i) {
    const auto fields = reader.Next();
    if (fields.size() != 1) reader.Fail("expected one value per line");
    theta.push_back(reader.ParseDouble(fields[0]));
  }
  const auto tail = reader.Next();
  if (tail.size() != 1 || tail[0] != "end") reader.Fail("expected 'end'");

  ckpt.params.theta = Vector(std::move(theta));
  ckpt.spec.Validate();
  ckpt.params.Validate();
  if (ckpt.params.theta.size() != ckpt.spec.ParamCount() ||
      ckpt.params.layers.size() != ckpt.spec.LayerCount()) {
    throw Error(ErrorCode::kShapeMismatch,
                "checkpoint layout does not match its model spec");
  }
  return ckpt;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << SerializeCheckpoint(ckpt);
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseCheckpoint(buf.str());
}

}  // namespace uib
