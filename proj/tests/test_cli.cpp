// End-to-end checks of the command-line tool; argv[1] is the binary path.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

std::string g_bin;
int g_failures = 0;

int run(const std::string& args) {
  std::string cmd = g_bin + " " + args + " > cli_stdout.txt 2> cli_stderr.txt";
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void expect(bool ok, const std::string& what) {
  if (!ok) {
    std::cerr << "FAIL: " << what << "\n---- stdout ----\n"
              << slurp("cli_stdout.txt") << "---- stderr ----\n"
              << slurp("cli_stderr.txt");
    ++g_failures;
  } else {
    std::cout << "ok: " << what << "\n";
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_tests <xce binary>\n";
    return 2;
  }
  g_bin = argv[1];

  expect(run("definitely-not-a-command") == 2, "unknown subcommand exits 2");
  expect(run("cost") == 2, "missing required flags exit 2");

  // the worked two-intermediate example, via a program file
  write_file("fig.prog",
             "input x1 1 1\n"
             "input x2 1 1\n"
             "%2 = mul %0 %1\n"
             "%3 = sin %2\n"
             "%4 = log %3\n"
             "%5 = sub %2 %3\n"
             "output %4\n"
             "output %5\n");
  expect(run("trace --program fig.prog --out fig.graph") == 0, "trace writes a graph");

  expect(run("cost --graph fig.graph --strategy reverse") == 0, "cost runs");
  expect(slurp("cli_stdout.txt").find("total\t-\t6") != std::string::npos,
         "reverse order costs 6");
  expect(run("cost --graph fig.graph --strategy forward") == 0, "cost forward runs");
  expect(slurp("cli_stdout.txt").find("total\t-\t8") != std::string::npos,
         "forward order costs 8");
  expect(run("cost --graph fig.graph") == 2, "cost without order or strategy exits 2");

  expect(run("search --graph fig.graph --method brute --out fig.order") == 0, "search runs");
  expect(slurp("cli_stdout.txt").find("best_cost=6") != std::string::npos,
         "brute force reports 6");
  expect(slurp("fig.order") == "2 1\n", "order file is 1-based");

  expect(run("cost --graph fig.graph --order fig.order") == 0, "cost accepts order files");
  expect(slurp("cli_stdout.txt").find("total\t-\t6") != std::string::npos,
         "searched order costs 6");

  expect(run("verify --graph-from-program fig.prog --order fig.order --point random:7 "
             "--tol 1e-9") == 0,
         "verify passes at a random point");
  expect(run("verify --task blackscholes --point probe --tol 1e-9") == 0,
         "verify passes on a built-in task");

  expect(run("randgen --seed 3 --n-in 2 --n-out 2 --n-mid 12 --out rand.prog") == 0,
         "randgen writes a program");
  expect(run("trace --program rand.prog --out rand.graph") == 0, "generated program traces");
  expect(run("search --graph rand.graph --method portfolio --budget 32 --steps 500 "
             "--seed 1 --out rand.order") == 0,
         "portfolio search runs on a generated graph");
  expect(run("verify --graph-from-program rand.prog --order rand.order --point random:1 "
             "--tol 1e-8") == 0,
         "searched order still verifies");

  expect(run("bench --tasks humanheartdipole --methods forward,reverse,markowitz") == 0,
         "bench baselines run");
  expect(slurp("cli_stdout.txt").find("humanheartdipole") != std::string::npos,
         "bench prints the task row");
  expect(slurp("cli_stdout.txt").find("paper (different trace)") != std::string::npos,
         "bench labels reference numbers");

  expect(run("audit --out table.txt") == 0, "audit emits the composition table");
  expect(slurp("table.txt").find("->") != std::string::npos, "audit table has rows");

  if (g_failures) {
    std::cerr << g_failures << " cli check(s) failed\n";
    return 1;
  }
  std::cout << "all cli checks passed\n";
  return 0;
}
