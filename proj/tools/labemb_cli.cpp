#include "labemb/pipeline.hpp"

int main(int argc, char** argv) { return labemb::run_cli(argc, argv); }
