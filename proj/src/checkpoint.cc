#include "timelyfl/checkpoint.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "timelyfl/errors.h"

namespace timelyfl {

namespace {

constexpr const char* kMagic = "timelyfl-checkpoint";

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next() {
    std::string line;
    if (!std::getline(in_, line)) {
      throw ParseError("checkpoint truncated after line " + std::to_string(line_no_),
                       line_no_ + 1);
    }
    ++line_no_;
    return std::istringstream(line);
  }

  std::vector<double> values(std::size_t expected) {
    std::istringstream row = next();
    std::vector<double> out;
    std::string tok;
    while (row >> tok) {
      char* end = nullptr;
      double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') {
        throw ParseError("bad number '" + tok + "' on line " + std::to_string(line_no_),
                         line_no_);
      }
      out.push_back(v);
    }
    if (out.size() != expected) {
      throw ParseError("expected " + std::to_string(expected) + " values on line " +
                           std::to_string(line_no_),
                       line_no_);
    }
    return out;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace

void save_checkpoint(std::ostream& out, const LayeredModel& model) {
  out << kMagic << " 1\n";
  out << "version " << model.version() << "\n";
  out << "layers " << model.layer_count() << "\n";
  for (const Layer& layer : model.layers()) {
    out << "layer " << layer.in_dim() << " " << layer.out_dim() << " "
        << activation_name(layer.activation) << "\n";
    for (std::size_t r = 0; r < layer.out_dim(); ++r) {
      auto row = layer.weights.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? " " : "") << hex(row[c]);
      out << "\n";
    }
    for (std::size_t o = 0; o < layer.biases.size(); ++o) {
      out << (o ? " " : "") << hex(layer.biases[o]);
    }
    out << "\n";
  }
}

LayeredModel load_checkpoint(std::istream& in) {
  LineReader reader(in);
  std::string word;
  int format = 0;
  if (!(reader.next() >> word >> format) || word != kMagic || format != 1) {
    throw ParseError("not a version-1 timelyfl checkpoint", 1);
  }
  std::uint64_t version = 0;
  if (!(reader.next() >> word >> version) || word != "version") {
    throw ParseError("missing version line", reader.line_no());
  }
  std::size_t count = 0;
  if (!(reader.next() >> word >> count) || word != "layers" || count == 0) {
    throw ParseError("missing layer count", reader.line_no());
  }
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t in_dim = 0, out_dim = 0;
    std::string act;
    if (!(reader.next() >> word >> in_dim >> out_dim >> act) || word != "layer") {
      throw ParseError("bad layer header", reader.line_no());
    }
    Layer layer;
    layer.activation = parse_activation(act);
    std::vector<double> w;
    w.reserve(in_dim * out_dim);
    for (std::size_t r = 0; r < out_dim; ++r) {
      auto row = reader.values(in_dim);
      w.insert(w.end(), row.begin(), row.end());
    }
    layer.weights = Matrix(out_dim, in_dim, std::move(w));
    layer.biases = reader.values(out_dim);
    layers.push_back(std::move(layer));
  }
  return LayeredModel(std::move(layers), version);
}

void save_checkpoint(const std::filesystem::path& path, const LayeredModel& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  save_checkpoint(out, model);
}

LayeredModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace timelyfl
