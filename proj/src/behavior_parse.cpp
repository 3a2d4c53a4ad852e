#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sdv/behavior.hpp"

namespace sdv {

ParamValue ParamValue::make_number(double v) {
  ParamValue p;
  p.kind = Kind::Number;
  p.number = v;
  return p;
}

ParamValue ParamValue::make_range(Range r) {
  ParamValue p;
  p.kind = Kind::Range;
  p.range = r;
  return p;
}

ParamValue ParamValue::make_tuple(std::vector<double> t) {
  ParamValue p;
  p.kind = Kind::Tuple;
  p.tuple = std::move(t);
  return p;
}

ParamValue ParamValue::make_symbol(std::string s) {
  ParamValue p;
  p.kind = Kind::Symbol;
  p.symbol = std::move(s);
  return p;
}

Range ParamValue::as_range() const {
  if (kind == Kind::Range) return range;
  if (kind == Kind::Number) return Range::point(number);
  throw DomainError("parameter is not a number or range: " + str());
}

double ParamValue::as_number() const {
  if (kind == Kind::Number) return number;
  if (kind == Kind::Range) return range.mid();
  throw DomainError("parameter is not numeric: " + str());
}

const std::string& ParamValue::as_symbol() const {
  if (kind != Kind::Symbol) throw DomainError("parameter is not a name: " + str());
  return symbol;
}

bool ParamValue::operator==(const ParamValue& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::Number: return number == o.number;
    case Kind::Range: return range.lo == o.range.lo && range.hi == o.range.hi;
    case Kind::Tuple: return tuple == o.tuple;
    case Kind::Symbol: return symbol == o.symbol;
  }
  return false;
}

std::string ParamValue::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Number: os << number; break;
    case Kind::Range: os << "[" << range.lo << ", " << range.hi << "]"; break;
    case Kind::Tuple: {
      os << "(";
      for (size_t i = 0; i < tuple.size(); ++i) os << (i ? ", " : "") << tuple[i];
      os << ")";
      break;
    }
    case Kind::Symbol: os << symbol; break;
  }
  return os.str();
}

namespace {

struct Line {
  int number = 0;
  int indent = 0;
  std::string text;  // content after indentation, comment stripped
};

// Character scanner over one logical line; columns are 1-based over the
// original line (indent included) so diagnostics point at the real spot.
class LineScanner {
 public:
  LineScanner(const Line& line, const std::string& file)
      : text_(line.text), file_(file), line_no_(line.number), base_col_(line.indent + 1) {}

  int col() const { return base_col_ + static_cast<int>(pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool try_eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const std::string& what) {
    if (!try_eat(c)) fail("expected '" + std::string(1, c) + "' " + what);
  }

  bool try_word(const std::string& w) {
    skip_ws();
    if (text_.compare(pos_, w.size(), w) != 0) return false;
    const size_t after = pos_ + w.size();
    if (after < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[after])) ||
                                 text_[after] == '_')) {
      return false;
    }
    pos_ = after;
    return true;
  }

  std::string ident(const std::string& what) {
    skip_ws();
    size_t start = pos_;
    if (pos_ < text_.size() &&
        (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                     text_[pos_] == '_')) {
        ++pos_;
      }
      return text_.substr(start, pos_ - start);
    }
    fail("expected " + what);
    return "";
  }

  double number(const std::string& what) {
    skip_ws();
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("expected " + what);
    pos_ += static_cast<size_t>(end - begin);
    return v;
  }

  // Unit annotation after a number (`m`, `s`, `m/s`, `m/s^2`): recognized
  // and discarded; values are SI throughout.
  void skip_unit() {
    skip_ws();
    if (pos_ >= text_.size() || !std::isalpha(static_cast<unsigned char>(text_[pos_]))) return;
    // A unit stops before '(' or ',' or '='; identifiers in value position
    // never follow a number, so a bare word here is a unit.
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '/' ||
            text_[pos_] == '^')) {
      ++pos_;
    }
  }

  [[noreturn]] void fail(const std::string& msg) { fail_at(col(), msg); }

  [[noreturn]] void fail_at(int column, const std::string& msg) {
    throw ParseError(file_, line_no_, column, msg);
  }

 private:
  const std::string& text_;
  const std::string& file_;
  int line_no_;
  int base_col_;
  size_t pos_ = 0;
};

ParamValue parse_value(LineScanner& sc) {
  const char c = sc.peek();
  if (c == '(') {
    sc.expect('(', "to open a tuple");
    std::vector<double> items;
    items.push_back(sc.number("a number in the tuple"));
    while (sc.try_eat(',')) items.push_back(sc.number("a number in the tuple"));
    sc.expect(')', "to close the tuple");
    return ParamValue::make_tuple(std::move(items));
  }
  if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
    const double v = sc.number("a number");
    sc.skip_unit();
    if (sc.peek() == '(') {
      sc.expect('(', "");
      sc.expect('+', "in range tolerance (+-p%)");
      sc.expect('-', "in range tolerance (+-p%)");
      const double pct = sc.number("a tolerance percentage");
      sc.expect('%', "after the tolerance value");
      sc.expect(')', "to close the range tolerance");
      return ParamValue::make_range(Range::pct(v, pct));
    }
    return ParamValue::make_number(v);
  }
  return ParamValue::make_symbol(sc.ident("a value"));
}

ParamMap parse_args(LineScanner& sc) {
  ParamMap params;
  sc.expect('(', "to open the argument list");
  if (sc.try_eat(')')) return params;
  while (true) {
    const int key_col = sc.col();
    const std::string key = sc.ident("a parameter name");
    sc.expect('=', "after parameter name '" + key + "'");
    ParamValue value = parse_value(sc);
    if (params.count(key)) sc.fail_at(key_col, "duplicate parameter '" + key + "'");
    params.emplace(key, std::move(value));
    if (sc.try_eat(',')) continue;
    sc.expect(')', "to close the argument list");
    break;
  }
  return params;
}

BTNode parse_node_line(const Line& line, const std::string& file) {
  LineScanner sc(line, file);
  BTNode node;
  node.line = line.number;
  node.col = sc.col();
  if (sc.try_word("fallback")) {
    node.kind = BTNode::Kind::Fallback;
    sc.expect(':', "after 'fallback'");
  } else if (sc.try_word("sequence")) {
    node.kind = BTNode::Kind::Sequence;
    sc.expect(':', "after 'sequence'");
  } else if (sc.try_word("parallel")) {
    node.kind = BTNode::Kind::Parallel;
    if (sc.peek() == '(') {
      sc.expect('(', "");
      if (!sc.try_eat(')')) {
        const std::string key = sc.ident("'threshold'");
        if (key != "threshold") sc.fail("parallel accepts only 'threshold'");
        sc.expect('=', "after 'threshold'");
        const double v = sc.number("a threshold count");
        if (v < 1.0 || v != std::floor(v)) sc.fail("threshold must be a positive integer");
        node.parallel_threshold = static_cast<int>(v);
        sc.expect(')', "to close the parallel arguments");
      }
    }
    sc.expect(':', "after 'parallel'");
  } else if (sc.try_word("condition")) {
    node.kind = BTNode::Kind::Condition;
    node.name = sc.ident("a condition name");
    node.params = parse_args(sc);
  } else if (sc.try_word("maneuver")) {
    node.kind = BTNode::Kind::Maneuver;
    node.name = sc.ident("a maneuver name");
    node.params = parse_args(sc);
  } else if (sc.try_word("subtree")) {
    node.kind = BTNode::Kind::SubtreeRef;
    node.name = sc.ident("a subtree name");
    if (sc.peek() == '(') node.params = parse_args(sc);
  } else if (sc.try_word("timer")) {
    node.kind = BTNode::Kind::Condition;
    node.name = "timer";
    node.params = parse_args(sc);
  } else {
    sc.fail("unknown node kind");
  }
  if (!sc.at_end()) sc.fail("unexpected trailing characters");
  return node;
}

// Parses one nesting level: all consecutive lines at the first line's indent.
// Children (deeper lines) recurse; only operators may have them.
void parse_level(const std::vector<Line>& lines, size_t* i, const std::string& file,
                 int parent_indent, std::vector<BTNode>* out) {
  if (*i >= lines.size() || lines[*i].indent <= parent_indent) return;
  const int level = lines[*i].indent;
  while (*i < lines.size() && lines[*i].indent > parent_indent) {
    const Line& line = lines[*i];
    if (line.indent != level) {
      throw ParseError(file, line.number, line.indent + 1, "inconsistent indentation");
    }
    BTNode node = parse_node_line(line, file);
    ++*i;
    if (*i < lines.size() && lines[*i].indent > level) {
      if (!node.is_operator()) {
        throw ParseError(file, lines[*i].number, lines[*i].indent + 1,
                         "only fallback/sequence/parallel nodes can have children");
      }
      parse_level(lines, i, file, level, &node.children);
    }
    if (node.is_operator() && node.children.empty()) {
      throw ParseError(file, line.number, node.col, "operator node has no children");
    }
    out->push_back(std::move(node));
  }
}

std::vector<Line> split_lines(const std::string& source, const std::string& file) {
  std::vector<Line> out;
  std::istringstream in(source);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    size_t indent = 0;
    while (indent < raw.size() && raw[indent] == ' ') ++indent;
    if (indent < raw.size() && raw[indent] == '\t') {
      throw ParseError(file, number, static_cast<int>(indent) + 1,
                       "tab character in indentation (use spaces)");
    }
    std::string content = raw.substr(indent);
    const size_t hash = content.find('#');
    if (hash != std::string::npos) content.erase(hash);
    while (!content.empty() && (content.back() == ' ' || content.back() == '\t')) {
      content.pop_back();
    }
    if (content.empty()) continue;
    out.push_back({number, static_cast<int>(indent), std::move(content)});
  }
  return out;
}

}  // namespace

std::vector<ParsedTree> parse_trees(const std::string& source, const std::string& filename) {
  const std::vector<Line> lines = split_lines(source, filename);
  std::vector<ParsedTree> out;
  size_t i = 0;
  const bool has_headers =
      !lines.empty() && lines.front().text.rfind("btree", 0) == 0;
  if (!has_headers) {
    if (lines.empty()) throw ParseError(filename, 1, 1, "empty tree source");
    std::vector<BTNode> roots;
    parse_level(lines, &i, filename, -1, &roots);
    if (roots.size() != 1) {
      throw ParseError(filename, lines[std::min(i, lines.size() - 1)].number, 1,
                       "tree must have a single root node");
    }
    out.push_back({"", std::move(roots.front()), filename});
    return out;
  }
  while (i < lines.size()) {
    const Line& header = lines[i];
    if (header.indent != 0) {
      throw ParseError(filename, header.number, header.indent + 1,
                       "expected 'btree NAME:' at top level");
    }
    LineScanner sc(header, filename);
    if (!sc.try_word("btree")) sc.fail("expected 'btree NAME:'");
    ParsedTree tree;
    tree.file = filename;
    tree.name = sc.ident("a tree name");
    sc.expect(':', "after the tree name");
    if (!sc.at_end()) sc.fail("unexpected trailing characters");
    ++i;
    std::vector<BTNode> roots;
    parse_level(lines, &i, filename, 0, &roots);
    if (roots.size() != 1) {
      throw ParseError(filename, header.number, 1,
                       "btree '" + tree.name + "' must have a single root node");
    }
    tree.root = std::move(roots.front());
    out.push_back(std::move(tree));
  }
  return out;
}

ParamValue parse_param_value(const std::string& text, const std::string& context) {
  Line line{1, 0, text};
  LineScanner sc(line, context);
  if (sc.at_end()) throw ParseError(context, 1, 1, "empty parameter value");
  ParamValue v = parse_value(sc);
  if (!sc.at_end()) {
    throw ParseError(context, 1, sc.col(), "trailing characters after the value");
  }
  return v;
}

BTNode parse_tree(const std::string& source, const std::string& filename) {
  std::vector<ParsedTree> trees = parse_trees(source, filename);
  if (trees.size() != 1) {
    throw ParseError(filename, 1, 1, "expected a single tree in this source");
  }
  return std::move(trees.front().root);
}

std::vector<ParsedTree> parse_tree_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, 0, "cannot open tree file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trees(buf.str(), path);
}

}  // namespace sdv
