"""
System Validation Script
Run this after installation to verify everything is working
"""
import sys
import tempfile
from pathlib import Path

# Add package directory to path
sys.path.insert(0, str(Path(__file__).parent))

from colorama import Fore, Style, init as colorama_init


def print_header(text):
    """Print a formatted header"""
    print("\n" + "=" * 60)
    print(f"  {text}")
    print("=" * 60)


def print_result(test_name, passed, message=""):
    """Print test result"""
    status = f"{Fore.GREEN}✓ PASS" if passed else f"{Fore.RED}✗ FAIL"
    print(f"{status}{Style.RESET_ALL} - {test_name}")
    if message:
        print(f"      {message}")


def main():
    colorama_init()
    print_header("System Validation")

    all_passed = True

    print_header("1. Python Environment")
    python_version = sys.version_info
    passed = python_version >= (3, 8)
    print_result("Python Version", passed,
                 f"Found {python_version.major}.{python_version.minor}.{python_version.micro}")
    all_passed &= passed

    print_header("2. Core Dependencies")
    required_modules = [
        ('numpy', 'NumPy'),
        ('scipy', 'SciPy'),
        ('soundfile', 'SoundFile'),
        ('pretty_midi', 'pretty_midi'),
        ('dotenv', 'python-dotenv'),
        ('tqdm', 'tqdm'),
        ('sqlite3', 'SQLite3'),
    ]
    for module_name, display_name in required_modules:
        try:
            __import__(module_name)
            print_result(display_name, True)
        except ImportError:
            print_result(display_name, False, f"Module '{module_name}' not found")
            all_passed = False

    print_header("3. Configuration")
    try:
        from transcriber import config
        print_result("Config Module", True)
        for name in ('SAMPLE_RATE', 'DATA_DIR', 'LOG_DIR', 'DATABASE_PATH'):
            print_result(f"  {name}", getattr(config, name) is not None, str(getattr(config, name)))
    except Exception as e:
        print_result("Config Module", False, str(e))
        all_passed = False

    print_header("4. Synthetic Transcription")
    try:
        from transcriber.audio_io import load_audio, write_audio
        from transcriber.evaluation import transposition_corrected_eval
        from transcriber.pipeline import PipelineConfig, transcribe_track
        from transcriber.synthesis import reference_performance

        performance = reference_performance()
        with tempfile.TemporaryDirectory() as tmp:
            wav = Path(tmp) / 'reference.wav'
            write_audio(performance.clip, wav)
            print_result("Audio Round Trip", load_audio(wav).num_channels == 2)
            result = transcribe_track(wav, PipelineConfig())

        channel = result.stage('channel_selection')['channel']
        print_result("Channel Selection", channel == performance.voice_channel, f"Selected channel {channel}")
        delta_t = result.stage('tuning')['delta_t']
        print_result("Tuning", abs(delta_t - 20.0) <= 5.0, f"delta_t = {delta_t:+.2f} cents (synthesised +20)")
        report = transposition_corrected_eval(result.notes, performance.notes)
        passed = report.FM_On >= 0.85 and report.FM_N >= 0.8
        print_result("Transcription", passed,
                     f"{len(result.notes)}/{len(performance.notes)} notes, "
                     f"FM_On={report.FM_On:.2f}, FM_N={report.FM_N:.2f}")
        all_passed &= passed and channel == performance.voice_channel
    except Exception as e:
        print_result("Synthetic Transcription", False, str(e))
        all_passed = False

    print_header("5. Results Database")
    try:
        from transcriber.database import ResultsDatabase
        with tempfile.TemporaryDirectory() as tmp:
            db = ResultsDatabase(Path(tmp) / 'results.db')
            run_id = db.start_run('validation')
            print_result("Database Creation", True, f"Run {run_id} recorded")
    except Exception as e:
        print_result("Database", False, str(e))
        all_passed = False

    print_header("Summary")
    if all_passed:
        print_result("System Validation", True, "All checks passed")
        return 0
    print_result("System Validation", False, "Some checks failed, see above")
    return 1


if __name__ == '__main__':
    sys.exit(main())
